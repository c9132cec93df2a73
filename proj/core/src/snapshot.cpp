#include "uct/snapshot.hpp"

#include <algorithm>
#include <fstream>

#include "uct/binary_io.hpp"
#include "uct/errors.hpp"

namespace uct {

namespace {
constexpr char kMagic[8] = {'U', 'C', 'T', 'M', 'O', 'D', 'E', 'L'};
}

void write_model(std::ostream& out, const ModelSnapshot& model) {
  out.write(kMagic, sizeof(kMagic));
  binary::write_u32(out, kModelFormatVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(model.input_channels));
  write_stack(out, model.stack);
  binary::write_u32(out, model.filter ? 1u : 0u);
  if (model.filter) write_map(out, model.filter->weights);
  binary::write_u32(out, model.scale_filter ? 1u : 0u);
  if (model.scale_filter) write_scale_filter(out, *model.scale_filter);
  if (!out) throw DataError("failed to write model snapshot");
}

ModelSnapshot read_model(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw DataError("not a model snapshot (bad magic)");
  }
  const auto version = binary::read_u32(in);
  if (version != kModelFormatVersion) {
    throw DataError("unsupported model snapshot version " + std::to_string(version));
  }
  ModelSnapshot m;
  m.input_channels = binary::read_u32(in);
  if (m.input_channels != 1 && m.input_channels != 3) {
    throw DataError("model snapshot declares " + std::to_string(m.input_channels) + " input channels");
  }
  m.stack = read_stack(in);
  if (binary::read_u32(in) != 0) m.filter = FilterBank{read_map(in)};
  if (binary::read_u32(in) != 0) m.scale_filter = read_scale_filter(in);
  if (m.filter && m.filter->weights.channels() != m.stack.output_channels(m.input_channels)) {
    throw DataError("model snapshot filter has " + std::to_string(m.filter->weights.channels()) +
                    " channels, extractor produces " + std::to_string(m.stack.output_channels(m.input_channels)));
  }
  return m;
}

void save_model(const std::string& path, const ModelSnapshot& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path);
  write_model(out, model);
}

ModelSnapshot load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path);
  return read_model(in);
}

}  // namespace uct
