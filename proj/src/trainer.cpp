// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "asl/checkpoint.hpp"
#include "asl/io_util.hpp"

namespace asl {

namespace {

HeadBox scale_box(const HeadBox& b, double sx, double sy) {
  HeadBox out = b;
  out.x = int(std::lround(b.x * sx));
  out.y = int(std::lround(b.y * sy));
  out.w = std::max(1, int(std::lround(b.w * sx)));
  out.h = std::max(1, int(std::lround(b.h * sy)));
  return out;
}

bool is_wearer_param(const nn::Var& v) {
  return v->name.rfind("audio.fc_wearer", 0) == 0;
}

}  // namespace

TrainData TrainData::build(const Dataset& dataset, const Model& model,
                           const std::function<void(int, int)>& progress) {
  TrainData data;
  const FeatureConfig fcfg = model.feature_config();
  const int ww = model.run.work_w, wh = model.run.work_h;
  const double sx = double(ww) / dataset.meta.image_w;
  const double sy = double(wh) / dataset.meta.image_h;
  const int n = int(dataset.labels.size());
  data.samples.reserve(size_t(n));
  for (int i = 0; i < n; ++i) {
    const auto& label = dataset.labels[size_t(i)];
    TrainSample s;
    const AudioSegment seg = dataset.segment(label.frame, fcfg);
    s.features = extract_features(seg, fcfg, model.feature).planes;
    Image8 frame = dataset.frame(label.frame);
    if (model.run.use_box_mask) frame = mask_background(frame, label.boxes);
    s.frame = resize_image(frame, ww, wh);
    s.active_dirs = label.active_directions();
    for (const auto& b : label.boxes) s.boxes.push_back(scale_box(b, sx, sy));
    s.wearer_active = label.wearer_active;
    data.samples.push_back(std::move(s));
    if (progress) progress(i + 1, n);
  }
  return data;
}

std::vector<nn::Var> stage1_params(const Model& model) {
  std::vector<nn::Var> out;
  for (const auto& v : model.params.items())
    if (!is_wearer_param(v)) out.push_back(v);
  return out;
}

std::vector<nn::Var> wearer_params(const Model& model) {
  std::vector<nn::Var> out;
  for (const auto& v : model.params.items())
    if (is_wearer_param(v)) out.push_back(v);
  return out;
}

namespace {

struct Stage1Batch {
  nn::Var features, frames;
  Tensor target_sphere, target_fov;
};

Stage1Batch assemble_stage1(const Model& model, const TrainData& data,
                            std::span<const int> batch) {
  const int b = int(batch.size());
  const int p = model.feature_planes;
  const int s = data.samples[size_t(batch[0])].features.dim(1);
  const int wh = model.run.work_h, ww = model.run.work_w;

  Tensor features({b, p, s, s});
  Tensor frames({b, 3, wh, ww});
  Tensor tgt_sphere({b, 2, kSphereEl, kSphereAz});
  Tensor tgt_fov({b, 2, wh, ww});
  const int64_t f_n = int64_t(p) * s * s;
  const int64_t i_n = int64_t(3) * wh * ww;
  const int64_t s_n = int64_t(2) * kSphereEl * kSphereAz;
  const int64_t v_n = int64_t(2) * wh * ww;
  for (int k = 0; k < b; ++k) {
    const auto& sample = data.samples[size_t(batch[size_t(k)])];
    std::copy_n(sample.features.data(), f_n, features.data() + k * f_n);
    const Tensor ft = image_to_tensor(sample.frame);
    std::copy_n(ft.data(), i_n, frames.data() + k * i_n);
    const Tensor ts = render_gt_sphere(sample.active_dirs);
    std::copy_n(ts.data(), s_n, tgt_sphere.data() + k * s_n);
    const Tensor tv = render_gt_fov(sample.boxes, ww, wh);
    std::copy_n(tv.data(), v_n, tgt_fov.data() + k * v_n);
  }
  return {nn::constant(std::move(features)), nn::constant(std::move(frames)),
          std::move(tgt_sphere), std::move(tgt_fov)};
}

[[noreturn]] void abort_non_finite(const char* where, double loss) {
  std::ostringstream os;
  os << where << ": loss is not finite (" << loss
     << "); aborting training. Check the learning rate and input data.";
  throw Error(os.str());
}

}  // namespace

double stage1_step(Model& model, nn::Adam& adam, const TrainData& data,
                   std::span<const int> batch) {
  if (batch.empty()) throw UsageError("stage1_step: empty batch");
  Stage1Batch in = assemble_stage1(model, data, batch);

  nn::Var extracted = model.audio->extract(in.features);
  nn::Var sphere = model.audio->sphere_logits(extracted);
  nn::Var loss_a = nn::softmax_cross_entropy(sphere, in.target_sphere);
  nn::Var x4 = av_input(sphere, in.frames, model.camera, model.run.work_w,
                        model.run.work_h);
  nn::Var fov = model.av->forward(x4, model.run.work_h, model.run.work_w);
  nn::Var loss_av = nn::softmax_cross_entropy(fov, in.target_fov);
  nn::Var loss = nn::add(loss_a, loss_av);

  const double value = loss->value[0];
  if (!std::isfinite(value)) abort_non_finite("stage1", value);
  adam.zero_grad();
  nn::backward(loss);
  adam.step();
  return value;
}

double stage2_step(Model& model, nn::Adam& adam, const TrainData& data,
                   std::span<const int> batch) {
  if (batch.empty()) throw UsageError("stage2_step: empty batch");
  const int b = int(batch.size());
  const int p = model.feature_planes;
  const int s = data.samples[size_t(batch[0])].features.dim(1);
  Tensor features({b, p, s, s});
  Tensor target({b, 2, 1, 1});
  const int64_t f_n = int64_t(p) * s * s;
  for (int k = 0; k < b; ++k) {
    const auto& sample = data.samples[size_t(batch[size_t(k)])];
    std::copy_n(sample.features.data(), f_n, features.data() + k * f_n);
    target.at4(k, sample.wearer_active ? 0 : 1, 0, 0) = 1.0f;
  }

  // The frozen parameters drop out of the graph entirely; gradient only
  // flows through the wearer head.
  std::vector<nn::Var> frozen;
  for (const auto& v : model.params.items())
    if (!is_wearer_param(v) && v->requires_grad) {
      v->requires_grad = false;
      frozen.push_back(v);
    }
  double value = 0;
  try {
    nn::Var extracted = model.audio->extract(nn::constant(std::move(features)));
    nn::Var logits = model.audio->wearer_logits(extracted);
    nn::Var loss = nn::softmax_cross_entropy(
        nn::reshape(logits, {b, 2, 1, 1}), target);
    value = loss->value[0];
    if (!std::isfinite(value)) abort_non_finite("stage2", value);
    adam.zero_grad();
    nn::backward(loss);
    adam.step();
  } catch (...) {
    for (auto& v : frozen) v->requires_grad = true;
    throw;
  }
  for (auto& v : frozen) v->requires_grad = true;
  return value;
}

namespace {

std::vector<int> shuffled_indices(int n, uint64_t seed, int epoch, int stage) {
  std::vector<int> idx(size_t(n));
  for (int i = 0; i < n; ++i) idx[size_t(i)] = i;
  Rng rng = Rng(seed).fork(uint64_t(1000 * stage + epoch));
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[size_t(i)], idx[size_t(rng.uniform_int(uint64_t(i) + 1))]);
  return idx;
}

std::string log_to_csv(const std::vector<LossLogRow>& log) {
  std::string out = "epoch,stage,loss\n";
  for (const auto& row : log)
    out += std::to_string(row.epoch) + "," + std::to_string(row.stage) + "," +
           format_double(row.loss) + "\n";
  return out;
}

}  // namespace

TrainResult train(Model& model, const TrainData& data, int stage,
                  const std::string& checkpoint_path,
                  const std::string& loss_log_path,
                  const std::function<void(const LossLogRow&)>& on_epoch) {
  if (data.samples.empty()) throw UsageError("train: empty dataset");
  const int n = int(data.samples.size());
  const int bs = model.run.batch;
  TrainResult result;

  nn::Adam::Options opt;
  opt.lr = float(model.run.lr);

  auto run_stage = [&](int st, nn::Adam& adam, nn::Adam* other) {
    for (int epoch = 1; epoch <= model.run.epochs; ++epoch) {
      const auto idx = shuffled_indices(n, model.run.seed, epoch, st);
      double total = 0;
      int batches = 0;
      for (int at = 0; at < n; at += bs) {
        const int take = std::min(bs, n - at);
        std::span<const int> batch(idx.data() + at, size_t(take));
        total += (st == 1) ? stage1_step(model, adam, data, batch)
                           : stage2_step(model, adam, data, batch);
        ++batches;
      }
      LossLogRow row{epoch, st, total / std::max(1, batches)};
      result.log.push_back(row);
      if (!loss_log_path.empty())
        atomic_write_file(loss_log_path, log_to_csv(result.log));
      if (!checkpoint_path.empty())
        save_model_checkpoint(checkpoint_path, model,
                              st == 1 ? &adam : other,
                              st == 2 ? &adam : (st == 1 ? nullptr : other));
      if (on_epoch) on_epoch(row);
    }
  };

  if (stage == 0 || stage == 1) {
    nn::Adam adam(stage1_params(model), opt);
    run_stage(1, adam, nullptr);
    if (stage == 0) {
      nn::Adam adam2(wearer_params(model), opt);
      run_stage(2, adam2, &adam);
    }
  } else if (stage == 2) {
    nn::Adam adam2(wearer_params(model), opt);
    run_stage(2, adam2, nullptr);
  } else {
    throw UsageError("train: stage must be 0 (both), 1 or 2");
  }
  return result;
}

void save_model_checkpoint(const std::string& path, const Model& model,
                           const nn::Adam* stage1_adam,
                           const nn::Adam* stage2_adam) {
  CheckpointWriter w;
  w.add_text("config", model.run.to_text());
  for (const auto& v : model.params.items()) w.add_f32("param." + v->name, v->value);
  auto dump_adam = [&w](const std::string& prefix, const nn::Adam& adam) {
    w.add_i64(prefix + ".t", adam.step_count());
    const auto& params = adam.params();
    auto& slots = const_cast<nn::Adam&>(adam).slots();
    for (size_t i = 0; i < params.size(); ++i) {
      w.add_f32(prefix + ".m." + params[i]->name, slots[i].m);
      w.add_f32(prefix + ".v." + params[i]->name, slots[i].v);
    }
  };
  if (stage1_adam) dump_adam("adam1", *stage1_adam);
  if (stage2_adam) dump_adam("adam2", *stage2_adam);
  w.write(path);
}

void load_weights(const std::string& path, Model* model) {
  const auto arrays = read_checkpoint(path);
  for (const auto& v : model->params.items()) {
    const std::string key = "param." + v->name;
    auto it = arrays.find(key);
    if (it == arrays.end())
      throw FormatError("checkpoint: missing array '" + key + "'");
    if (it->second.dims != v->value.dims())
      throw FormatError(
          "checkpoint: array '" + key + "' has shape " +
          Tensor::shape_str_of(it->second.dims) + " but the model wants " +
          v->value.shape_str());
    v->value = it->second.as_f32();
  }
}

Model load_model(const std::string& path) {
  const auto arrays = read_checkpoint(path);
  auto it = arrays.find("config");
  if (it == arrays.end())
    throw FormatError("checkpoint: missing 'config' echo in " + path);
  Model model = Model::build(RunConfig::from_text(it->second.as_text(), path));
  load_weights(path, &model);
  return model;
}

}  // namespace asl
