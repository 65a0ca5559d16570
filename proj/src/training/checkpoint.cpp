/* Copyright 2026 The charnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "charnmt/training/checkpoint.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "charnmt/common/config_entries.h"
#include "charnmt/common/error.h"

namespace charnmt::training {
namespace {

constexpr char kMagic[4] = {'C', 'M', 'T', '1'};
constexpr std::size_t kPreamble = 16;  // magic, version, payload size

class Writer {
 public:
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void Bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void Text(const std::string& s) {
    U32(static_cast<std::uint32_t>(s.size()));
    Bytes(s.data(), s.size());
  }
  std::vector<unsigned char>& bytes() { return out_; }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t U64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string Text() {
    const std::uint32_t n = U32();
    Need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  const unsigned char* Take(std::size_t n) {
    Need(n);
    const unsigned char* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == size_; }

 private:
  void Need(std::size_t n) const {
    if (size_ - pos_ < n) throw DataError("checkpoint payload is inconsistent with its own lengths");
  }

  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t Crc(const unsigned char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(crc, data, static_cast<uInt>(n)));
}

}  // namespace

std::vector<unsigned char> SerializeCheckpoint(const Model& model, const CheckpointMeta& meta) {
  std::vector<std::string> lines;
  lines.push_back("architecture=" + model.architecture());
  for (const auto& [k, v] : model.ConfigEntries()) lines.push_back("model." + k + "=" + v);
  for (const auto& [k, v] : meta.config) lines.push_back("config." + k + "=" + v);
  lines.push_back("epoch=" + std::to_string(meta.epoch));
  lines.push_back("val_perplexity=" + FormatReal(meta.val_perplexity));
  lines.push_back("val_accuracy=" + FormatReal(meta.val_accuracy));
  lines.push_back("rng_state=" + meta.rng_state);

  Writer payload;
  payload.U32(static_cast<std::uint32_t>(lines.size()));
  for (const auto& l : lines) payload.Text(l);
  const auto& names = model.params().names();
  const auto& tensors = model.params().tensors();
  payload.U32(static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    payload.Text(names[i]);
    payload.U64(tensors[i].size());
    for (float f : tensors[i].data()) payload.U32(std::bit_cast<std::uint32_t>(f));
  }

  Writer file;
  file.Bytes(kMagic, 4);
  file.U32(kCheckpointVersion);
  file.U64(payload.bytes().size());
  file.Bytes(payload.bytes().data(), payload.bytes().size());
  file.U32(Crc(file.bytes().data(), file.bytes().size()));
  return std::move(file.bytes());
}

LoadedCheckpoint DeserializeCheckpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    if (bytes.size() < 4) throw CheckpointTruncatedError("checkpoint truncated: " + std::to_string(bytes.size()) + " bytes");
    throw DataError("not a checkpoint file (bad magic)");
  }
  if (bytes.size() < kPreamble + 4) {
    throw CheckpointTruncatedError("checkpoint truncated: " + std::to_string(bytes.size()) + " bytes");
  }
  Reader pre(bytes.data() + 4, 12);
  const std::uint32_t version = pre.U32();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint format version " + std::to_string(version) + ", expected " +
                                 std::to_string(kCheckpointVersion));
  }
  const std::uint64_t payload_size = pre.U64();
  if (payload_size > bytes.size() || bytes.size() - kPreamble - 4 < payload_size) {
    throw CheckpointTruncatedError("checkpoint truncated: header announces " + std::to_string(payload_size) +
                                   " payload bytes, file has " + std::to_string(bytes.size()));
  }
  const std::size_t body = kPreamble + payload_size;
  if (bytes.size() != body + 4) throw CheckpointChecksumError("checkpoint has trailing bytes");
  Reader tail(bytes.data() + body, 4);
  if (tail.U32() != Crc(bytes.data(), body)) throw CheckpointChecksumError("checkpoint CRC-32 mismatch");

  Reader r(bytes.data() + kPreamble, payload_size);
  const std::uint32_t nlines = r.U32();
  std::map<std::string, std::string> header, model_entries;
  LoadedCheckpoint out;
  for (std::uint32_t i = 0; i < nlines; ++i) {
    const std::string line = r.Text();
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("checkpoint header line without '='");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key.rfind("model.", 0) == 0) {
      model_entries[key.substr(6)] = value;
    } else if (key.rfind("config.", 0) == 0) {
      out.meta.config[key.substr(7)] = value;
    } else {
      header[key] = value;
    }
  }
  out.meta.epoch = ReadSize(header, "epoch", 0);
  out.meta.val_perplexity = ReadReal(header, "val_perplexity", 0.0);
  out.meta.val_accuracy = ReadReal(header, "val_accuracy", 0.0);
  out.meta.rng_state = ReadString(header, "rng_state", "");
  out.model = CreateModel(ReadString(header, "architecture", ""), model_entries, 0);

  auto& names = out.model->params().names();
  auto& tensors = out.model->params().tensors();
  const std::uint32_t count = r.U32();
  if (count != tensors.size()) {
    throw DataError("checkpoint has " + std::to_string(count) + " tensors, model declares " +
                    std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = r.Text();
    const std::uint64_t n = r.U64();
    if (name != names[i] || n != tensors[i].size()) {
      throw DataError("checkpoint tensor " + std::to_string(i) + " is '" + name + "' with " + std::to_string(n) +
                      " values, model expects '" + names[i] + "' with " + std::to_string(tensors[i].size()));
    }
    const unsigned char* p = r.Take(n * 4);
    auto dst = tensors[i].mutable_data();
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b) v |= std::uint32_t(p[4 * k + b]) << (8 * b);
      dst[k] = std::bit_cast<float>(v);
    }
  }
  if (!r.done()) throw DataError("checkpoint payload has unread bytes");
  return out;
}

void SaveCheckpoint(const std::string& path, const Model& model, const CheckpointMeta& meta) {
  const auto bytes = SerializeCheckpoint(model, meta);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move checkpoint into '" + path + "'");
}

LoadedCheckpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(bytes);
}

}  // namespace charnmt::training
