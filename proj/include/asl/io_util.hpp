// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>

namespace asl {

// Writes content to path via a temp file in the same directory plus rename,
// so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

void ensure_dir(const std::string& path);

// Shortest round-trip decimal formatting for doubles (std::to_chars).
std::string format_double(double v);

}  // namespace asl
