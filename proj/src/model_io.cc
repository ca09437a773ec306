#include "g2p/model_io.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "g2p/error.h"

namespace g2p {

namespace {

constexpr char kMagic[4] = {'G', '2', 'P', 'M'};
constexpr std::uint32_t kMaxHeaderBytes = 64u << 20;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(std::string("truncated ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(' ', start);
    out.push_back(s.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

const char* const kReservedKeys[] = {"attention_dim", "embed_dim",          "hidden_dim",
                                     "graphemes",     "grapheme_vocab_size", "phonemes",
                                     "phoneme_vocab_size", "payload_floats"};

std::map<std::string, std::string> header_fields(const Model& model) {
  std::map<std::string, std::string> h;
  for (const auto& [k, v] : model.metadata) {
    for (const char* r : kReservedKeys)
      if (k == r) throw InvalidArgument("metadata key '" + k + "' is reserved");
    if (k.empty() || k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw InvalidArgument("metadata entries may not contain '=' in keys or newlines");
    h[k] = v;
  }
  const auto& d = model.params.dims;
  h["attention_dim"] = std::to_string(d.attention);
  h["embed_dim"] = std::to_string(d.embed);
  h["hidden_dim"] = std::to_string(d.hidden);
  h["grapheme_vocab_size"] = std::to_string(d.grapheme_vocab);
  h["phoneme_vocab_size"] = std::to_string(d.phoneme_vocab);
  h["graphemes"] = join(model.vocabs.graphemes.tokens());
  h["phonemes"] = join(model.vocabs.phonemes.tokens());
  h["payload_floats"] = std::to_string(model.params.parameter_count());
  return h;
}

int parse_dim(const std::map<std::string, std::string>& h, const std::string& key) {
  auto it = h.find(key);
  if (it == h.end()) throw FormatError("model header is missing '" + key + "'");
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second, &pos);
    if (pos != it->second.size() || v < 1 || v > (1L << 24)) throw FormatError("");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw FormatError("model header field '" + key + "' is not a valid dimension");
  }
}

}  // namespace

void save_model(const Model& model, std::ostream& out) {
  model.params.validate();
  if (model.vocabs.graphemes.size() != model.params.dims.grapheme_vocab ||
      model.vocabs.phonemes.size() != model.params.dims.phoneme_vocab)
    throw InvalidArgument("save_model: vocabulary sizes do not match the parameters");

  std::string header;
  for (const auto& [k, v] : header_fields(model)) header += k + "=" + v + "\n";

  out.write(kMagic, 4);
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::vector<char> payload;
  payload.reserve(model.params.parameter_count() * 4);
  model.params.for_each([&](const std::string&, const auto& block) {
    for (Eigen::Index r = 0; r < block.rows(); ++r)
      for (Eigen::Index c = 0; c < block.cols(); ++c) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(block(r, c)));
        for (int k = 0; k < 4; ++k) payload.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
      }
  });
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error("save_model: write failed");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  save_model(model, out);
}

std::string serialize_model(const Model& model) {
  std::ostringstream out(std::ios::binary);
  save_model(model, out);
  return std::move(out).str();
}

Model load_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
    throw FormatError("not a G2PM model file");
  const std::uint32_t version = get_u32(in, "version");
  if (version != kModelFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(version) +
                      " (expected " + std::to_string(kModelFormatVersion) + ")");
  const std::uint32_t header_bytes = get_u32(in, "header length");
  if (header_bytes > kMaxHeaderBytes) throw FormatError("implausible header length");
  std::string header(header_bytes, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_bytes)))
    throw FormatError("truncated header");

  std::map<std::string, std::string> h;
  std::istringstream lines(header);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw FormatError("malformed header line: " + line);
    if (!h.emplace(line.substr(0, eq), line.substr(eq + 1)).second)
      throw FormatError("duplicate header key: " + line.substr(0, eq));
  }

  Model model;
  ModelDims dims;
  dims.embed = parse_dim(h, "embed_dim");
  dims.hidden = parse_dim(h, "hidden_dim");
  dims.attention = parse_dim(h, "attention_dim");
  dims.grapheme_vocab = parse_dim(h, "grapheme_vocab_size");
  dims.phoneme_vocab = parse_dim(h, "phoneme_vocab_size");
  try {
    if (!h.contains("graphemes") || !h.contains("phonemes")) throw FormatError("");
    model.vocabs.graphemes = Vocabulary::from_tokens(split_spaces(h["graphemes"]));
    model.vocabs.phonemes = Vocabulary::from_tokens(split_spaces(h["phonemes"]));
  } catch (const std::exception&) {
    throw FormatError("model header has invalid token lists");
  }
  if (model.vocabs.graphemes.size() != dims.grapheme_vocab ||
      model.vocabs.phonemes.size() != dims.phoneme_vocab)
    throw FormatError("token lists disagree with vocabulary sizes");

  model.params = ModelParams<float>::zeros(dims);
  if (!h.contains("payload_floats") ||
      h["payload_floats"] != std::to_string(model.params.parameter_count()))
    throw FormatError("payload size disagrees with the model dimensions");

  std::vector<unsigned char> payload(model.params.parameter_count() * 4);
  if (!in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size())))
    throw FormatError("truncated parameter payload");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after payload");

  std::size_t pos = 0;
  model.params.for_each([&](const std::string& name, auto& block) {
    for (Eigen::Index r = 0; r < block.rows(); ++r)
      for (Eigen::Index c = 0; c < block.cols(); ++c) {
        std::uint32_t bits = 0;
        for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(payload[pos++]) << (8 * k);
        const float v = std::bit_cast<float>(bits);
        if (!std::isfinite(v)) throw FormatError("non-finite value in block " + name);
        block(r, c) = v;
      }
  });

  for (const char* r : kReservedKeys) h.erase(r);
  model.metadata = std::move(h);
  return model;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model: " + path.string());
  return load_model(in);
}

Model deserialize_model(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return load_model(in);
}

}  // namespace g2p
