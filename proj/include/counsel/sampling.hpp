#pragma once

#include <optional>
#include <string_view>

namespace counsel {

// Which sampling profile a model call runs under.
enum class RolePreset { Generation, Judgment, Judge };

struct SamplingParams {
  double temperature = 0.0;
  double top_p = 1.0;
  std::optional<int> top_k;

  friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

// Default presets: generation {0.9, 0.75, 20}, judgment {0.3, 0.75, 20},
// judge {0.0, 0.95, 64}.
SamplingParams sampling_for_role(RolePreset role);

std::string_view to_string(RolePreset role);
RolePreset parse_role_preset(std::string_view raw);

}  // namespace counsel
