#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cctlens/cct.hpp"

namespace cctlens {

class FilterError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Exact method name, or a prefix pattern ending in a single trailing `*`.
class FilterPattern {
  public:
    /// Throws FilterError when `*` appears anywhere but the last position.
    explicit FilterPattern(std::string_view text);

    bool matches(std::string_view method) const noexcept;
    const std::string& text() const noexcept { return text_; }
    bool is_prefix() const noexcept { return prefix_; }

    bool operator==(const FilterPattern&) const = default;

  private:
    std::string text_;
    bool prefix_ = false;
};

bool matches(const FilterPattern& pattern, std::string_view method) noexcept;

enum class Verdict { Include, Exclude };

struct FilterSet {
    std::vector<FilterPattern> includes;
    std::vector<FilterPattern> excludes;
    /// Consulted only when `includes` is empty.
    Verdict default_verdict = Verdict::Include;

    bool keeps(std::string_view method) const noexcept;
    bool is_identity() const noexcept;
};

enum class FilterMode {
    /// Rejected node removed, its children spliced into the parent; its time
    /// stays in the parent's total and shows up as parent self time.
    AttributeToParent,
    /// Rejected subtree removed and its total subtracted from every ancestor.
    DropSubtree,
};

/// Returns a filtered copy. The root itself is never subject to includes or
/// the default verdict; an exclude pattern that matches the root raises
/// FilterError.
CctNode apply_filter(const CctNode& root, const FilterSet& fs, FilterMode mode = FilterMode::AttributeToParent);

}  // namespace cctlens
