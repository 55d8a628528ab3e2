//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/pretrain/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mgm/core/error.hpp"
#include "mgm/molgraph/graph_io.hpp"

namespace mgm::pretrain {

using tensorcore::ParamStore;
using tensorcore::Tensor;

namespace {

constexpr char kMagic[8] = {'M', 'G', 'M', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::string &out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
}

void put_f64(std::string &out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
  const std::string &data;
  std::size_t pos = 0;
  const std::string &origin;

  void need(std::size_t n) const {
    if (pos + n > data.size()) {
      throw DataError("truncated checkpoint: " + origin);
    }
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(data[pos + static_cast<std::size_t>(b)]))
           << (8 * b);
    }
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

const Tensor *Checkpoint::find(const std::string &name) const {
  for (const auto &[n, t]: arrays) {
    if (n == name) {
      return &t;
    }
  }
  return nullptr;
}

void save_checkpoint(const std::string &path, const ParamStore &store,
                     const CheckpointMeta &meta) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u64(out, meta.config_fingerprint);
  put_u64(out, static_cast<std::uint64_t>(meta.epoch));
  put_u64(out, meta.rng_state.size());
  for (std::uint64_t w: meta.rng_state) {
    put_u64(out, w);
  }
  put_u64(out, store.count());
  for (const auto &p: store) {
    put_u64(out, p->name.size());
    out.append(p->name);
    put_u64(out, p->value.rows());
    put_u64(out, p->value.cols());
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      put_f64(out, p->value.data()[i]);
    }
  }
  molgraph::write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string &path) {
  const std::string data = molgraph::read_file(path);
  Reader r{data, 0, path};
  const std::string magic = r.str(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file: " + path);
  }
  Checkpoint ckpt;
  ckpt.meta.config_fingerprint = r.u64();
  ckpt.meta.epoch = static_cast<std::int64_t>(r.u64());
  const std::uint64_t rng_words = r.u64();
  for (std::uint64_t i = 0; i < rng_words; ++i) {
    ckpt.meta.rng_state.push_back(r.u64());
  }
  const std::uint64_t count = r.u64();
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::uint64_t name_len = r.u64();
    const std::string name = r.str(name_len);
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t.data()[i] = r.f64();
    }
    ckpt.arrays.emplace_back(name, std::move(t));
  }
  if (r.pos != data.size()) {
    throw DataError("trailing bytes in checkpoint: " + path);
  }
  return ckpt;
}

void restore_into_store(const Checkpoint &ckpt, ParamStore &store) {
  if (store.count() != 0) {
    throw DataError("restore_into_store: store must be empty");
  }
  for (const auto &[name, tensor]: ckpt.arrays) {
    store.create(name, tensor);
  }
}

}  // namespace mgm::pretrain
