#include "ptk/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "ptk/common/binary_io.hpp"
#include "ptk/common/error.hpp"
#include "ptk/common/hash.hpp"

namespace ptk::nn {

namespace {
constexpr std::string_view kMagic = "PTC1";
constexpr std::string_view kFormat = "ptk-checkpoint/1";
}  // namespace

Checkpoint Checkpoint::from_parameters(const ParameterList& params, nlohmann::json metadata) {
  Checkpoint ck;
  ck.metadata = std::move(metadata);
  for (const auto& p : params) ck.tensors[p.name] = p.var.value();
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  nlohmann::json index = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : tensors) {
    index[name] = {{"dtype", "f32"}, {"shape", {m.rows(), m.cols()}}, {"offset", offset}};
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(float);
  }
  const nlohmann::json header = {{"format", kFormat}, {"metadata", metadata}, {"tensors", index}};
  const std::string text = header.dump();

  std::ostringstream out(std::ios::binary);
  io::write_magic(out, kMagic);
  io::write_pod(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : tensors) {
    for (Index i = 0; i < m.size(); ++i) io::write_pod(out, static_cast<float>(m.data()[i]));
  }
  io::write_file(path, out.str());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  io::expect_magic(in, kMagic, path);
  std::uint64_t header_len = 0;
  if (!io::read_pod(in, header_len) || header_len > (1ULL << 32)) {
    throw FormatError("truncated checkpoint header in " + path.string());
  }
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("truncated checkpoint header in " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  if (header.value("format", "") != kFormat) throw FormatError("unknown checkpoint format in " + path.string());

  std::vector<char> blob{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  Checkpoint ck;
  ck.metadata = header.value("metadata", nlohmann::json::object());
  for (const auto& [name, entry] : header.at("tensors").items()) {
    const std::string dtype = entry.at("dtype");
    const Index rows = entry.at("shape").at(0);
    const Index cols = entry.at("shape").at(1);
    const std::uint64_t off = entry.at("offset");
    const std::size_t width = dtype == "f32" ? sizeof(float) : dtype == "f64" ? sizeof(double) : 0;
    if (width == 0) throw FormatError("unsupported dtype '" + dtype + "' for tensor " + name);
    const std::uint64_t bytes = static_cast<std::uint64_t>(rows * cols) * width;
    if (rows < 0 || cols < 0 || off + bytes > blob.size()) {
      throw FormatError("tensor " + name + " extends past end of " + path.string());
    }
    Matrix m(rows, cols);
    const char* src = blob.data() + off;
    for (Index i = 0; i < m.size(); ++i) {
      if (width == sizeof(float)) {
        float v;
        std::memcpy(&v, src + i * sizeof(float), sizeof(float));
        m.data()[i] = v;
      } else {
        std::memcpy(m.data() + i, src + i * sizeof(double), sizeof(double));
      }
    }
    ck.tensors.emplace(name, std::move(m));
  }
  return ck;
}

void Checkpoint::restore(const ParameterList& params, bool allow_extra) const {
  for (const auto& p : params) {
    auto it = tensors.find(p.name);
    if (it == tensors.end()) throw FormatError("checkpoint is missing tensor " + p.name);
    if (it->second.rows() != p.var.rows() || it->second.cols() != p.var.cols()) {
      throw FormatError("checkpoint tensor " + p.name + " has shape " + std::to_string(it->second.rows()) + "x" +
                        std::to_string(it->second.cols()) + ", model expects " + std::to_string(p.var.rows()) +
                        "x" + std::to_string(p.var.cols()));
    }
  }
  if (!allow_extra && tensors.size() != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, model has " +
                      std::to_string(params.size()));
  }
  for (const auto& p : params) {
    Var v = p.var;
    v.mutable_value() = tensors.at(p.name);
  }
}

std::string parameter_hash(const ParameterList& params) {
  Fnv1a h;
  for (const auto& p : params) {
    h.update(p.name);
    h.update_pod(p.var.rows());
    h.update_pod(p.var.cols());
    const Matrix& m = p.var.value();
    h.update(std::as_bytes(std::span<const double>(m.data(), static_cast<std::size_t>(m.size()))));
  }
  return h.hex();
}

}  // namespace ptk::nn
