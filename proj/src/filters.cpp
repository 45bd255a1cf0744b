#include "cctlens/filters.hpp"

#include <algorithm>

namespace cctlens {

namespace {

void splice_into(CctNode& parent, CctNode&& child) {
    if (CctNode* existing = parent.find_child(child.method)) {
        merge_into(*existing, child);
    } else {
        parent.children.push_back(std::move(child));
    }
}

// Appends the survivors of `node` (itself, or its promoted descendants) to `parent`.
void attribute(const CctNode& node, const FilterSet& fs, CctNode& parent) {
    if (fs.keeps(node.method)) {
        CctNode copy{node.method, node.invocations, node.total_time, node.truncated, {}};
        for (const auto& c : node.children) {
            attribute(c, fs, copy);
        }
        splice_into(parent, std::move(copy));
        return;
    }
    for (const auto& c : node.children) {
        attribute(c, fs, parent);
    }
}

// Copies kept children of `src` into `dst`; returns the time removed below `src`.
Nanos drop(const CctNode& src, const FilterSet& fs, CctNode& dst) {
    Nanos removed = 0;
    for (const auto& c : src.children) {
        if (!fs.keeps(c.method)) {
            removed += c.total_time;
            continue;
        }
        CctNode copy{c.method, c.invocations, c.total_time, c.truncated, {}};
        copy.total_time -= drop(c, fs, copy);
        removed += c.total_time - copy.total_time;
        dst.children.push_back(std::move(copy));
    }
    return removed;
}

}  // namespace

FilterPattern::FilterPattern(std::string_view text) : text_(text) {
    if (text_.empty()) {
        throw FilterError("empty filter pattern");
    }
    const auto star = text_.find('*');
    if (star != std::string::npos && star != text_.size() - 1) {
        throw FilterError("'*' may only appear as the last character of a pattern: '" + text_ + "'");
    }
    if (star != std::string::npos) {
        prefix_ = true;
        text_.pop_back();
    }
}

bool FilterPattern::matches(std::string_view method) const noexcept {
    if (prefix_) {
        return method.substr(0, text_.size()) == text_;
    }
    return method == text_;
}

bool matches(const FilterPattern& pattern, std::string_view method) noexcept {
    return pattern.matches(method);
}

bool FilterSet::keeps(std::string_view method) const noexcept {
    auto hit = [method](const FilterPattern& p) { return p.matches(method); };
    if (std::any_of(excludes.begin(), excludes.end(), hit)) {
        return false;
    }
    if (includes.empty()) {
        return default_verdict == Verdict::Include;
    }
    return std::any_of(includes.begin(), includes.end(), hit);
}

bool FilterSet::is_identity() const noexcept {
    return includes.empty() && excludes.empty() && default_verdict == Verdict::Include;
}

CctNode apply_filter(const CctNode& root, const FilterSet& fs, FilterMode mode) {
    for (const auto& p : fs.excludes) {
        if (p.matches(root.method)) {
            throw FilterError("cannot filter the synthetic root '" + root.method + "'");
        }
    }
    CctNode out{root.method, root.invocations, root.total_time, root.truncated, {}};
    if (mode == FilterMode::AttributeToParent) {
        for (const auto& c : root.children) {
            attribute(c, fs, out);
        }
    } else {
        out.total_time -= drop(root, fs, out);
    }
    return out;
}

}  // namespace cctlens
