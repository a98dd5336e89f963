#include <cstring>
#include <fstream>
#include <string>

#include "uescore/errors.hpp"
#include "uescore/lars.hpp"
#include "uescore/rng.hpp"

namespace uescore::lars {
namespace {

constexpr char kMagic[8] = {'U', 'E', 'S', 'C', 'L', 'A', 'R', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void append_pod(std::string& buffer, const T& value) {
  buffer.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& buffer, const std::string& path)
      : buffer_(buffer), path_(path) {}

  template <typename T>
  T read() {
    if (offset_ + sizeof(T) > buffer_.size()) {
      throw Error(path_ + ": model file truncated");
    }
    T value;
    std::memcpy(&value, buffer_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  void read_doubles(double* out, std::ptrdiff_t count) {
    const std::size_t bytes = static_cast<std::size_t>(count) * sizeof(double);
    if (offset_ + bytes > buffer_.size()) {
      throw Error(path_ + ": model file truncated");
    }
    std::memcpy(out, buffer_.data() + offset_, bytes);
    offset_ += bytes;
  }

  std::size_t offset() const { return offset_; }

 private:
  const std::string& buffer_;
  std::string path_;
  std::size_t offset_ = 0;
};

}  // namespace

void save_model(const LarsModel& model, const std::filesystem::path& path) {
  std::string buffer;
  buffer.append(kMagic, sizeof(kMagic));
  append_pod(buffer, kVersion);

  const auto& c = model.config;
  append_pod(buffer, static_cast<std::int32_t>(c.d));
  append_pod(buffer, static_cast<std::int32_t>(c.layers));
  append_pod(buffer, static_cast<std::int32_t>(c.heads));
  append_pod(buffer, static_cast<std::int32_t>(c.k));
  append_pod(buffer, static_cast<std::int32_t>(c.vocab_size));
  append_pod(buffer, static_cast<std::int32_t>(c.max_len));
  append_pod(buffer, static_cast<std::uint8_t>(c.association == Association::kAdditive));
  append_pod(buffer, static_cast<std::uint8_t>(c.prob_embeddings_trainable));
  append_pod(buffer, static_cast<std::uint8_t>(c.include_question));
  append_pod(buffer, static_cast<std::uint8_t>(c.text_only));
  append_pod(buffer, static_cast<std::uint8_t>(c.prob_only));
  append_pod(buffer, static_cast<std::uint64_t>(c.seed));

  const auto& part = model.partition;
  append_pod(buffer, static_cast<std::int32_t>(part.k));
  append_pod(buffer, static_cast<std::int32_t>(part.d));
  append_pod(buffer, part.scale);
  append_pod(buffer, static_cast<std::uint64_t>(part.boundaries.size()));
  for (double b : part.boundaries) append_pod(buffer, b);

  // Parameter payload in canonical tensor order.
  auto& mutable_params = const_cast<ParamSet&>(model.params);
  const auto tensors = parameter_tensors(mutable_params, model.config);
  append_pod(buffer, static_cast<std::uint64_t>(tensors.size()));
  for (const auto& tensor : tensors) {
    append_pod(buffer, static_cast<std::uint64_t>(tensor.size));
    buffer.append(reinterpret_cast<const char*>(tensor.data),
                  static_cast<std::size_t>(tensor.size) * sizeof(double));
  }

  append_pod(buffer, fnv1a64(buffer.data(), buffer.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out) throw Error("I/O failure writing " + path.string());
}

LarsModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string buffer((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("I/O failure reading " + path.string());

  if (buffer.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
    throw Error(path.string() + ": model file truncated (checksum unavailable)");
  }
  std::uint64_t stored_checksum = 0;
  std::memcpy(&stored_checksum, buffer.data() + buffer.size() - sizeof(std::uint64_t),
              sizeof(std::uint64_t));
  const std::uint64_t actual =
      fnv1a64(buffer.data(), buffer.size() - sizeof(std::uint64_t));
  if (stored_checksum != actual) {
    throw Error(path.string() + ": checksum mismatch (file truncated or corrupt)");
  }

  Reader reader(buffer, path.string());
  char magic[8];
  for (char& ch : magic) ch = reader.read<char>();
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(path.string() + ": not a model file");
  }
  const auto version = reader.read<std::uint32_t>();
  if (version != kVersion) {
    throw Error(path.string() + ": unsupported model version " + std::to_string(version));
  }

  LarsConfig config;
  config.d = reader.read<std::int32_t>();
  config.layers = reader.read<std::int32_t>();
  config.heads = reader.read<std::int32_t>();
  config.k = reader.read<std::int32_t>();
  config.vocab_size = reader.read<std::int32_t>();
  config.max_len = reader.read<std::int32_t>();
  config.association = reader.read<std::uint8_t>() != 0 ? Association::kAdditive
                                                        : Association::kSequential;
  config.prob_embeddings_trainable = reader.read<std::uint8_t>() != 0;
  config.include_question = reader.read<std::uint8_t>() != 0;
  config.text_only = reader.read<std::uint8_t>() != 0;
  config.prob_only = reader.read<std::uint8_t>() != 0;
  config.seed = reader.read<std::uint64_t>();
  config.validate();

  ProbPartition partition;
  partition.k = reader.read<std::int32_t>();
  partition.d = reader.read<std::int32_t>();
  partition.scale = reader.read<double>();
  const auto boundary_count = reader.read<std::uint64_t>();
  partition.boundaries.resize(boundary_count);
  reader.read_doubles(partition.boundaries.data(),
                      static_cast<std::ptrdiff_t>(boundary_count));
  partition.validate();
  if (partition.k != config.k || partition.d != config.d) {
    throw Error(path.string() + ": partition geometry does not match config (k, d)");
  }

  // Shape the model from the config, then overwrite every tensor.
  LarsModel model = init_model(config, partition);
  const auto tensors = parameter_tensors(model.params, model.config);
  const auto tensor_count = reader.read<std::uint64_t>();
  if (tensor_count != tensors.size()) {
    throw Error(path.string() + ": tensor count mismatch");
  }
  for (const auto& tensor : tensors) {
    const auto size = reader.read<std::uint64_t>();
    if (size != static_cast<std::uint64_t>(tensor.size)) {
      throw Error(path.string() + ": size mismatch for tensor " + tensor.name);
    }
    reader.read_doubles(tensor.data, tensor.size);
  }
  if (reader.offset() != buffer.size() - sizeof(std::uint64_t)) {
    throw Error(path.string() + ": trailing bytes in model file");
  }
  return model;
}

}  // namespace uescore::lars
