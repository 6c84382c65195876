#include "cognate/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "cognate/diagnostics.hpp"

namespace cognate {

namespace {

constexpr std::string_view kMagic = "COGCKPT";
constexpr std::size_t kMaxHeaderBytes = std::size_t{64} << 20;

void put_f32(std::string& buf, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return std::bit_cast<float>(bits);
}

std::string read_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string("checkpoint: missing ") + what);
  return line;
}

}  // namespace

void round_to_float32(ParameterStore& params) {
  for (auto& e : params.entries())
    for (auto& v : e.data) v = static_cast<double>(static_cast<float>(v));
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["config"] = ckpt.config.to_json();
  auto& tensors = header["tensors"] = nlohmann::json::array();
  for (const auto& e : ckpt.params.entries()) tensors.push_back({{"name", e.name}, {"shape", e.shape}});
  auto& meta = header["metadata"] = nlohmann::json::object();
  if (ckpt.threshold) meta["threshold"] = *ckpt.threshold;
  if (ckpt.vocabulary) meta["vocabulary"] = ckpt.vocabulary->to_json();
  meta["info"] = ckpt.info;
  const std::string text = header.dump();

  std::string payload;
  payload.reserve(ckpt.params.parameter_count() * 4);
  for (const auto& e : ckpt.params.entries())
    for (double v : e.data) put_f32(payload, v);

  out << kMagic << ' ' << kCheckpointVersion << '\n' << text.size() << '\n';
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  const std::string magic = read_line(in, "magic line");
  std::istringstream ml(magic);
  std::string word;
  int version = 0;
  if (!(ml >> word >> version) || word != kMagic) throw DataError("checkpoint: bad magic line");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));

  const std::string len_line = read_line(in, "header length");
  std::size_t header_len = 0;
  try {
    std::size_t used = 0;
    header_len = std::stoull(len_line, &used);
    if (used != len_line.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw DataError("checkpoint: bad header length line");
  }
  if (header_len == 0 || header_len > kMaxHeaderBytes) throw DataError("checkpoint: implausible header length");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) throw DataError("checkpoint: truncated header");

  Checkpoint ckpt;
  std::vector<std::pair<std::string, ag::Shape>> tensors;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("format_version").get<int>() != version)
      throw DataError("checkpoint: header version disagrees with magic line");
    ckpt.config = ModelConfig::from_json(header.at("config"));
    for (const auto& t : header.at("tensors"))
      tensors.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<ag::Shape>());
    const auto& meta = header.at("metadata");
    if (meta.contains("threshold")) ckpt.threshold = meta["threshold"].get<double>();
    if (meta.contains("vocabulary")) ckpt.vocabulary = Vocabulary::from_json(meta["vocabulary"]);
    if (meta.contains("info")) ckpt.info = meta["info"];
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (tensors != ParameterStore::layout(ckpt.config))
    throw DataError("checkpoint: tensor list does not match the stored model config");

  std::size_t total = 0;
  for (const auto& [name, shape] : tensors) total += ag::numel(shape);
  std::vector<unsigned char> payload(total * 4);
  if (!in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size())))
    throw DataError("checkpoint: truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint: trailing bytes after payload");

  std::size_t off = 0;
  for (auto& [name, shape] : tensors) {
    std::vector<double> data(ag::numel(shape));
    for (auto& v : data) {
      v = get_f32(&payload[off]);
      off += 4;
      if (!std::isfinite(v)) throw DataError("checkpoint: non-finite value in " + name);
    }
    ckpt.params.add(name, shape, std::move(data));
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_params(const ParameterStore& params, const ModelConfig& config, const std::filesystem::path& path) {
  Checkpoint ckpt{config, params, std::nullopt, std::nullopt};
  save_checkpoint(ckpt, path);
}

ParameterStore load_params(const std::filesystem::path& path, const ModelConfig& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!(ckpt.config == expected))
    throw DataError(path.string() + ": checkpoint was written for a different model config");
  return std::move(ckpt.params);
}

}  // namespace cognate
