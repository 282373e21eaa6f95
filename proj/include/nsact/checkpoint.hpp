#pragma once

#include <string>

#include <json.hpp>

#include "nsact/nn.hpp"

namespace nsact::nn {

inline constexpr int kCheckpointVersion = 1;

/// Versioned JSON: model config, every trainable tensor and the BN running statistics.
template <typename Scalar>
nlohmann::json checkpoint_to_json(const Network<Scalar>& net);

template <typename Scalar>
Network<Scalar> checkpoint_from_json(const nlohmann::json& j);

template <typename Scalar>
void save_checkpoint(const Network<Scalar>& net, const std::string& path);

template <typename Scalar>
Network<Scalar> load_checkpoint(const std::string& path);

}  // namespace nsact::nn
