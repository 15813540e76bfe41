#include "sen/checkpoint.hpp"

#include <fstream>

#include "sen/binio.hpp"
#include "sen/errors.hpp"

namespace sen {

void checkpoint_save(const SENWeights& weights, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint to " + path);
  out.write("SENW", 4);
  binio::put_u32(out, 1);

  const SENConfig& c = weights.config;
  binio::put_i32(out, c.conv1);
  binio::put_i32(out, c.conv2);
  binio::put_i32(out, c.conv3);
  binio::put_i32(out, c.conv4);
  binio::put_i32(out, c.channels);
  binio::put_i32(out, c.lstm_hidden);
  binio::put_i32(out, c.k);
  binio::put_i32(out, c.f);
  binio::put_u64(out, c.seed);

  NamedParams params = const_cast<SENWeights&>(weights).named_params();
  binio::put_u32(out, (uint32_t)params.size());
  for (const auto& [name, t] : params) {
    binio::put_str(out, name);
    binio::put_u32(out, (uint32_t)t->shape.size());
    for (int e : t->shape) binio::put_i32(out, e);
    binio::put_f64s(out, t->values);
  }
  if (!out) throw DataError("write failure on " + path);
}

SENWeights checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "SENW") {
    throw DataError("not a checkpoint file (bad magic): " + path);
  }
  const uint32_t version = binio::get_u32(in, "version");
  if (version != 1) throw DataError("unsupported checkpoint version " + std::to_string(version));

  SENConfig c;
  c.conv1 = binio::get_i32(in, "conv1");
  c.conv2 = binio::get_i32(in, "conv2");
  c.conv3 = binio::get_i32(in, "conv3");
  c.conv4 = binio::get_i32(in, "conv4");
  c.channels = binio::get_i32(in, "channels");
  c.lstm_hidden = binio::get_i32(in, "lstm_hidden");
  c.k = binio::get_i32(in, "k");
  c.f = binio::get_i32(in, "f");
  c.seed = binio::get_u64(in, "seed");

  // Expected shapes come from a fresh network under the stored config.
  SENWeights expected = init_network(c);
  NamedParams slots = expected.named_params();

  const uint32_t count = binio::get_u32(in, "tensor count");
  if (count != slots.size()) {
    throw DataError("checkpoint holds " + std::to_string(count) + " tensors, expected " +
                    std::to_string(slots.size()));
  }
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = binio::get_str(in, "tensor name");
    Tensor* slot = nullptr;
    for (auto& [n, t] : slots) {
      if (n == name) {
        slot = t;
        break;
      }
    }
    if (!slot) throw DataError("checkpoint tensor '" + name + "' is not part of this network");
    const uint32_t ndim = binio::get_u32(in, "rank");
    Shape shape((size_t)ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[(size_t)d] = binio::get_i32(in, "extent");
    if (shape != slot->shape) {
      throw DataError("checkpoint tensor '" + name + "' has shape " + shape_str(shape) +
                      ", config requires " + shape_str(slot->shape));
    }
    std::vector<double> values = binio::get_f64s(in, name.c_str());
    if ((int)values.size() != slot->size()) {
      throw DataError("checkpoint tensor '" + name + "' has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(slot->size()));
    }
    slot->values = std::move(values);
  }
  return expected;
}

}  // namespace sen
