#include "protoid/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "protoid/error.hpp"

namespace protoid {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'R', 'O', 'T', 'O', 'I', 'D', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

template <typename T>
T get_field(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

json to_json(const TransformerConfig& c) {
  return {{"num_layers", c.num_layers},   {"d_model", c.d_model},
          {"num_heads", c.num_heads},     {"d_ff", c.d_ff},
          {"fc_hidden", c.fc_hidden},     {"num_classes", c.num_classes},
          {"seq_len", c.seq_len},         {"multi_label", c.multi_label},
          {"positional_encoding", c.positional_encoding}};
}

json to_json(const CnnConfig& c) {
  return {{"input_len", c.input_len},          {"conv1_channels", c.conv1_channels},
          {"conv1_kernel", c.conv1_kernel},    {"conv2_channels", c.conv2_channels},
          {"conv2_kernel", c.conv2_kernel},    {"dense_hidden", c.dense_hidden},
          {"num_classes", c.num_classes}};
}

json to_json(const TokenizationConfig& c) {
  return {{"slices", c.slices}, {"slice_len", c.slice_len}, {"stride_samples", c.stride_samples}};
}

TransformerConfig transformer_config_from_json(const json& j) {
  try {
    TransformerConfig c;
    c.num_layers = get_field<Index>(j, "num_layers", c.num_layers);
    c.d_model = get_field<Index>(j, "d_model", c.d_model);
    c.num_heads = get_field<Index>(j, "num_heads", c.num_heads);
    c.d_ff = get_field<Index>(j, "d_ff", c.d_ff);
    c.fc_hidden = get_field<Index>(j, "fc_hidden", c.fc_hidden);
    c.num_classes = get_field<Index>(j, "num_classes", c.num_classes);
    c.seq_len = get_field<Index>(j, "seq_len", c.seq_len);
    c.multi_label = get_field<bool>(j, "multi_label", c.multi_label);
    c.positional_encoding = get_field<bool>(j, "positional_encoding", c.positional_encoding);
    validate(c);
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("transformer config: ") + e.what());
  }
}

CnnConfig cnn_config_from_json(const json& j) {
  try {
    CnnConfig c;
    c.input_len = get_field<Index>(j, "input_len", c.input_len);
    c.conv1_channels = get_field<Index>(j, "conv1_channels", c.conv1_channels);
    c.conv1_kernel = get_field<Index>(j, "conv1_kernel", c.conv1_kernel);
    c.conv2_channels = get_field<Index>(j, "conv2_channels", c.conv2_channels);
    c.conv2_kernel = get_field<Index>(j, "conv2_kernel", c.conv2_kernel);
    c.dense_hidden = get_field<Index>(j, "dense_hidden", c.dense_hidden);
    c.num_classes = get_field<Index>(j, "num_classes", c.num_classes);
    validate(c);
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("cnn config: ") + e.what());
  }
}

TokenizationConfig tokenization_from_json(const json& j) {
  try {
    TokenizationConfig c;
    c.slices = get_field<Index>(j, "slices", c.slices);
    c.slice_len = get_field<Index>(j, "slice_len", c.slice_len);
    c.stride_samples = get_field<Index>(j, "stride_samples", c.stride_samples);
    validate(c);
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("tokenization config: ") + e.what());
  }
}

std::unique_ptr<Network<float>> make_network(const std::string& family, const json& config) {
  if (family == "transformer") return std::make_unique<Transformer<float>>(transformer_config_from_json(config));
  if (family == "cnn") return std::make_unique<Cnn<float>>(cnn_config_from_json(config));
  fail(ErrorKind::ConfigError, "unknown model family '" + family + "'");
}

json network_config(const Network<float>& net) {
  if (const auto* t = dynamic_cast<const Transformer<float>*>(&net)) return to_json(t->config());
  if (const auto* c = dynamic_cast<const Cnn<float>*>(&net)) return to_json(c->config());
  fail(ErrorKind::ConfigError, "network family '" + net.family() + "' is not serializable");
}

void save_checkpoint(const std::filesystem::path& path, const Network<float>& net, const TokenizationConfig& tok,
                     const json& metadata) {
  json header;
  header["family"] = net.family();
  header["config"] = network_config(net);
  header["tokenization"] = to_json(tok);
  header["metadata"] = metadata;
  json tensors = json::array();
  for (const TensorSlot& s : net.layout().slots()) {
    tensors.push_back({{"name", s.name}, {"shape", {s.rows, s.cols}}, {"offset", s.offset}});
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const Vector<float>& p = net.parameters();
  std::vector<char> blob(static_cast<std::size_t>(p.size()) * 4);
  for (Index i = 0; i < p.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(p[i]);
    for (int k = 0; k < 4; ++k) blob[static_cast<std::size_t>(4 * i + k)] = static_cast<char>((bits >> (8 * k)) & 0xFF);
  }
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  require(static_cast<bool>(in) && magic == kMagic, ErrorKind::FormatError, path.string() + " is not a checkpoint");
  const std::uint64_t len = get_u64(in);
  require(static_cast<bool>(in) && len < (std::uint64_t{1} << 32), ErrorKind::FormatError, "bad header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  require(static_cast<bool>(in), ErrorKind::FormatError, "truncated checkpoint header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::FormatError, std::string("checkpoint header: ") + e.what());
  }
  LoadedModel model;
  try {
    model.network = make_network(header.at("family").get<std::string>(), header.at("config"));
    model.tokenization = tokenization_from_json(header.at("tokenization"));
    model.metadata = header.value("metadata", json::object());
    const ParameterLayout& layout = model.network->layout();
    const json& tensors = header.at("tensors");
    require(tensors.size() == layout.slots().size(), ErrorKind::FormatError, "tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const TensorSlot& s = layout.slots()[i];
      const json& t = tensors[i];
      require(t.at("name").get<std::string>() == s.name && t.at("shape")[0].get<Index>() == s.rows &&
                  t.at("shape")[1].get<Index>() == s.cols && t.at("offset").get<Index>() == s.offset,
              ErrorKind::FormatError, "tensor " + s.name + " does not match the architecture");
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::FormatError, std::string("checkpoint header: ") + e.what());
  }

  Vector<float>& p = model.network->parameters();
  std::vector<unsigned char> blob(static_cast<std::size_t>(p.size()) * 4);
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  require(static_cast<bool>(in), ErrorKind::FormatError, "truncated tensor data");
  for (Index i = 0; i < p.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(blob[static_cast<std::size_t>(4 * i + k)]) << (8 * k);
    p[i] = std::bit_cast<float>(bits);
  }
  return model;
}

}  // namespace protoid
