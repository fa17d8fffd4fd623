#pragma once

#include <string_view>

namespace bidscreen {

enum class Family { logit, lasso_logit, cart, random_forest, gradient_boosting, neural_net, super_learner };

std::string_view to_string(Family f) noexcept;
Family parse_family(std::string_view text);

}  // namespace bidscreen
