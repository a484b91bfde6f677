#pragma once

#include <string>

#include "json.hpp"

#include "inference.hpp"
#include "model_selection.hpp"

namespace lbpp {

inline constexpr const char* kModelFormat = "lbpp-model";
inline constexpr int kModelFormatVersion = 1;

nlohmann::json descriptor_to_json(const BasisDescriptor& descriptor);
BasisDescriptor descriptor_from_json(const nlohmann::json& j);

// `config` is stored verbatim under "config".
nlohmann::json model_to_json(const FittedModel& model,
                             const nlohmann::json& config = nlohmann::json::object());

// Rebuilds the basis from its descriptor and reassembles the cached factors at
// the stored mode. Custom bases cannot be restored.
FittedModel model_from_json(const nlohmann::json& j);

void save_model(const std::string& path, const FittedModel& model,
                const nlohmann::json& config = nlohmann::json::object());
FittedModel load_model(const std::string& path);

// One row per candidate: searched parameters, basis size, convergence flag,
// the marginal-likelihood terms and the total. Failed fits have empty terms.
void write_selection_csv(const std::string& path, const SelectionResult& result,
                         const std::string& comment = {});

}  // namespace lbpp
