#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "protoid/cnn.hpp"
#include "protoid/tokenizer.hpp"
#include "protoid/transformer.hpp"

namespace protoid {

// File layout:
//   8 bytes   magic "PROTOID1"
//   8 bytes   header length H, uint64 little-endian
//   H bytes   UTF-8 JSON {family, config, tokenization, metadata,
//                         tensors: [{name, shape: [rows, cols], offset}]}
//   ...       float32 little-endian blobs; offset counts floats from here

nlohmann::json to_json(const TransformerConfig& cfg);
nlohmann::json to_json(const CnnConfig& cfg);
nlohmann::json to_json(const TokenizationConfig& cfg);
TransformerConfig transformer_config_from_json(const nlohmann::json& j);
CnnConfig cnn_config_from_json(const nlohmann::json& j);
TokenizationConfig tokenization_from_json(const nlohmann::json& j);

/// Builds an uninitialized network of the named family ("transformer" or "cnn").
std::unique_ptr<Network<float>> make_network(const std::string& family, const nlohmann::json& config);

/// Architecture config of a network built by make_network.
nlohmann::json network_config(const Network<float>& net);

struct LoadedModel {
  std::unique_ptr<Network<float>> network;
  TokenizationConfig tokenization;
  nlohmann::json metadata;
};

void save_checkpoint(const std::filesystem::path& path, const Network<float>& net, const TokenizationConfig& tok,
                     const nlohmann::json& metadata = nlohmann::json::object());

LoadedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace protoid
