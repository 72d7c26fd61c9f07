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

#include "ragqa/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "ragqa/io.hpp"

namespace ragqa {
namespace fid {

namespace {
constexpr char kCheckpointMagic[4] = {'R', 'G', 'Q', 'M'};
constexpr uint32_t kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const std::string &path, const FidModel<float> &model,
                     const Tokenizer &tokenizer) {
  std::ofstream out = io::open_output(path);
  io::write_magic(out, kCheckpointMagic);
  io::write_u32(out, kCheckpointVersion);

  const ModelConfig &c = model.config;
  io::write_u32(out, static_cast<uint32_t>(c.vocab_size));
  io::write_u32(out, static_cast<uint32_t>(c.hidden));
  io::write_u32(out, static_cast<uint32_t>(c.layers));
  io::write_u32(out, static_cast<uint32_t>(c.heads));
  io::write_u32(out, static_cast<uint32_t>(c.ffn_hidden));
  io::write_u32(out, static_cast<uint32_t>(c.max_input_len));
  io::write_u32(out, static_cast<uint32_t>(c.max_decode_len));
  io::write_u8(out, c.tie_embeddings ? 1 : 0);
  io::write_u64(out, c.seed);

  tokenizer.save(out);

  uint32_t count = 0;
  visit_params(model, [&](const std::string &, const Mat<float> &, bool) { ++count; });
  io::write_u32(out, count);
  visit_params(model, [&](const std::string &name, const Mat<float> &mat, bool) {
    io::write_string(out, name);
    io::write_u32(out, static_cast<uint32_t>(mat.rows()));
    io::write_u32(out, static_cast<uint32_t>(mat.cols()));
    for (Eigen::Index r = 0; r < mat.rows(); ++r)
      for (Eigen::Index c2 = 0; c2 < mat.cols(); ++c2) io::write_f32(out, mat(r, c2));
  });
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in = io::open_input(path);
  io::check_magic(in, kCheckpointMagic, "checkpoint");
  uint32_t version = io::read_u32(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));

  ModelConfig c;
  c.vocab_size = static_cast<int>(io::read_u32(in));
  c.hidden = static_cast<int>(io::read_u32(in));
  c.layers = static_cast<int>(io::read_u32(in));
  c.heads = static_cast<int>(io::read_u32(in));
  c.ffn_hidden = static_cast<int>(io::read_u32(in));
  c.max_input_len = static_cast<int>(io::read_u32(in));
  c.max_decode_len = static_cast<int>(io::read_u32(in));
  c.tie_embeddings = io::read_u8(in) != 0;
  c.seed = io::read_u64(in);

  Checkpoint ckpt;
  ckpt.tokenizer = Tokenizer::load(in);
  ckpt.model = zeros_like<float>(c);

  uint32_t count = io::read_u32(in);
  uint32_t seen = 0;
  visit_params(ckpt.model, [&](const std::string &name, Mat<float> &mat, bool) {
    ++seen;
    std::string stored = io::read_string(in);
    if (stored != name)
      throw std::runtime_error("checkpoint: expected tensor '" + name + "', found '" + stored +
                               "'");
    uint32_t rows = io::read_u32(in);
    uint32_t cols = io::read_u32(in);
    if (rows != static_cast<uint32_t>(mat.rows()) || cols != static_cast<uint32_t>(mat.cols()))
      throw std::runtime_error("checkpoint: tensor '" + name + "' has unexpected shape");
    for (uint32_t r = 0; r < rows; ++r)
      for (uint32_t c2 = 0; c2 < cols; ++c2) mat(r, c2) = io::read_f32(in);
  });
  if (seen != count)
    throw std::runtime_error("checkpoint: tensor count mismatch");
  return ckpt;
}

}  // namespace fid
}  // namespace ragqa
