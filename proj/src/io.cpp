/*
 * Copyright (c) 2026 The ragqa Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ragqa/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ragqa {
namespace io {

namespace {

void write_bytes(std::ostream &out, const char *data, size_t n) {
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) throw std::runtime_error("io: write failed");
}

void read_bytes(std::istream &in, char *data, size_t n) {
  in.read(data, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n)
    throw std::runtime_error("io: unexpected end of stream");
}

}  // namespace

void write_u8(std::ostream &out, uint8_t v) {
  char b = static_cast<char>(v);
  write_bytes(out, &b, 1);
}

void write_u32(std::ostream &out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  write_bytes(out, b, 4);
}

void write_u64(std::ostream &out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  write_bytes(out, b, 8);
}

void write_f32(std::ostream &out, float v) {
  static_assert(sizeof(float) == 4, "float must be 32-bit");
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

void write_string(std::ostream &out, const std::string &s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  if (!s.empty()) write_bytes(out, s.data(), s.size());
}

void write_f32_array(std::ostream &out, const float *data, size_t n) {
  for (size_t i = 0; i < n; ++i) write_f32(out, data[i]);
}

uint8_t read_u8(std::istream &in) {
  char b;
  read_bytes(in, &b, 1);
  return static_cast<uint8_t>(b);
}

uint32_t read_u32(std::istream &in) {
  char b[4];
  read_bytes(in, b, 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(b[i])) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream &in) {
  char b[8];
  read_bytes(in, b, 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(b[i])) << (8 * i);
  return v;
}

float read_f32(std::istream &in) {
  uint32_t bits = read_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::string read_string(std::istream &in) {
  uint32_t n = read_u32(in);
  std::string s(n, '\0');
  if (n) read_bytes(in, s.data(), n);
  return s;
}

void read_f32_array(std::istream &in, float *data, size_t n) {
  for (size_t i = 0; i < n; ++i) data[i] = read_f32(in);
}

void write_magic(std::ostream &out, const char tag[4]) { write_bytes(out, tag, 4); }

void check_magic(std::istream &in, const char tag[4], const std::string &what) {
  char b[4];
  read_bytes(in, b, 4);
  if (std::memcmp(b, tag, 4) != 0)
    throw std::runtime_error(what + ": bad magic bytes, not a " + what + " file");
}

std::ifstream open_input(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path);
  return in;
}

std::ofstream open_output(const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  return out;
}

std::string read_text_file(const std::string &path) {
  std::ifstream in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace io
}  // namespace ragqa
