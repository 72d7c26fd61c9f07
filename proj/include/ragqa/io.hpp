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

#ifndef RAGQA_IO_HPP
#define RAGQA_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ragqa {
namespace io {

// Binary primitives are explicitly little-endian so on-disk formats are
// byte-identical across platforms regardless of host endianness.

void write_u8(std::ostream &out, uint8_t v);
void write_u32(std::ostream &out, uint32_t v);
void write_u64(std::ostream &out, uint64_t v);
void write_f32(std::ostream &out, float v);
void write_string(std::ostream &out, const std::string &s);  // u32 length prefix
void write_f32_array(std::ostream &out, const float *data, size_t n);

uint8_t read_u8(std::istream &in);
uint32_t read_u32(std::istream &in);
uint64_t read_u64(std::istream &in);
float read_f32(std::istream &in);
std::string read_string(std::istream &in);
void read_f32_array(std::istream &in, float *data, size_t n);

// Writes/checks a 4-byte magic tag. check_magic throws if the stream does
// not start with the expected tag.
void write_magic(std::ostream &out, const char tag[4]);
void check_magic(std::istream &in, const char tag[4], const std::string &what);

// Opens for binary read/write, throwing with the path in the message.
std::ifstream open_input(const std::string &path);
std::ofstream open_output(const std::string &path);

std::string read_text_file(const std::string &path);

}  // namespace io
}  // namespace ragqa

#endif  // RAGQA_IO_HPP
