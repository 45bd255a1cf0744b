#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "cctlens/filters.hpp"
#include "cctlens/metrics.hpp"

namespace cctlens {

enum class Tier { Web, Business, Dao, Middleware, Other };

std::string_view to_string(Tier tier) noexcept;
/// Case-insensitive; throws std::invalid_argument on an unknown label.
Tier parse_tier(std::string_view label);

/// Component label that stands for the method's declaring type.
inline constexpr std::string_view kDeclaringType = "*";

struct ComponentRule {
    FilterPattern pattern;
    std::string component;
    Tier tier = Tier::Other;
};

struct Classification {
    std::string component;
    Tier tier = Tier::Other;

    bool operator==(const Classification&) const = default;
};

/// Simple name of the declaring type: `a.b.Foo.bar(x.Y)` -> `Foo`.
std::string declaring_type(std::string_view method);

/// Ordered rules; the first match wins. Unmatched methods fall back to
/// (declaring type, Other).
class ComponentCatalog {
  public:
    ComponentCatalog() = default;
    explicit ComponentCatalog(std::vector<ComponentRule> rules) : rules_(std::move(rules)) {}

    Classification classify(std::string_view method) const;
    const std::vector<ComponentRule>& rules() const noexcept { return rules_; }

    /// One rule per line, `tier<TAB>component<TAB>pattern`, `#` comments.
    static ComponentCatalog parse(std::istream& in);
    static ComponentCatalog load(const std::string& path);
    std::string to_text() const;

  private:
    std::vector<ComponentRule> rules_;
};

Classification classify(std::string_view method, const ComponentCatalog& catalog);

/// Built-in rules for the HR Portal: middleware stubs and container first,
/// then DAOs, stateless beans and the web tier.
ComponentCatalog default_hr_catalog();

struct ComponentUtilizationRow {
    std::string component;
    Tier tier = Tier::Other;
    Nanos self_time = 0;
    double utilization_pct = 0.0;
    std::uint64_t invocations = 0;

    bool operator==(const ComponentUtilizationRow&) const = default;
};

/// Groups hot-spot rows by classification; sorted by self_time descending,
/// then component and tier.
std::vector<ComponentUtilizationRow> component_utilization(const std::vector<HotSpotRow>& rows,
                                                           const ComponentCatalog& catalog);

}  // namespace cctlens
