#include "cctlens/cct.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace cctlens {

namespace {

std::string describe(const std::string& method, ThreadId tid) {
    return "'" + method + "' on tid " + std::to_string(tid);
}

std::string with_line(std::size_t line, const std::string& msg) {
    return line == 0 ? msg : "line " + std::to_string(line) + ": " + msg;
}

nlohmann::ordered_json node_to_json(const CctNode& node) {
    nlohmann::ordered_json j;
    j["method"] = node.method;
    j["invocations"] = node.invocations;
    j["total_time"] = node.total_time;
    j["truncated"] = node.truncated;
    auto children = nlohmann::ordered_json::array();
    for (const auto& c : node.children) {
        children.push_back(node_to_json(c));
    }
    j["children"] = std::move(children);
    return j;
}

CctNode node_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw std::runtime_error("CCT document: node is not an object");
    }
    CctNode node;
    node.method = j.at("method").get<std::string>();
    node.invocations = j.at("invocations").get<std::uint64_t>();
    node.total_time = j.at("total_time").get<Nanos>();
    node.truncated = j.at("truncated").get<bool>();
    for (const auto& c : j.at("children")) {
        CctNode child = node_from_json(c);
        if (node.find_child(child.method) != nullptr) {
            throw std::runtime_error("CCT document: duplicate child '" + child.method + "' under '" + node.method + "'");
        }
        node.children.push_back(std::move(child));
    }
    return node;
}

void fold(const CctNode& node, std::string& prefix, std::vector<std::string>& out) {
    for (const auto& c : node.children) {
        const auto keep = prefix.size();
        if (!prefix.empty()) {
            prefix += ';';
        }
        prefix += c.method;
        out.push_back(prefix + ' ' + std::to_string(self_time(c)));
        fold(c, prefix, out);
        prefix.resize(keep);
    }
}

}  // namespace

CctNode* CctNode::find_child(std::string_view m) noexcept {
    for (auto& c : children) {
        if (c.method == m) {
            return &c;
        }
    }
    return nullptr;
}

const CctNode* CctNode::find_child(std::string_view m) const noexcept {
    for (const auto& c : children) {
        if (c.method == m) {
            return &c;
        }
    }
    return nullptr;
}

CctNode& CctNode::child(std::string_view m) {
    if (auto* c = find_child(m)) {
        return *c;
    }
    children.push_back(CctNode{std::string(m), 0, 0, false, {}});
    return children.back();
}

std::string root_label(ThreadId tid) {
    return "<root:" + std::to_string(tid) + ">";
}

CctBuilder::CctBuilder(ThreadId tid, BuildOptions options)
    : tid_(tid), options_(options), root_(std::make_unique<CctNode>()) {
    root_->method = root_label(tid);
    root_->invocations = 1;
}

const std::string& CctBuilder::frame_method(const Frame& f) const {
    return f.node != nullptr ? f.node->method : f.capped_method;
}

void CctBuilder::add(const TraceEvent& ev, std::size_t line) {
    Nanos ts = ev.ts;
    if (seen_ && ts < last_ts_) {
        if (options_.mode == BuildMode::Strict) {
            throw TraceError(line, with_line(line, "timestamp regression on tid " + std::to_string(tid_)));
        }
        ts = last_ts_;
    }
    seen_ = true;
    last_ts_ = ts;

    if (ev.kind == EventKind::Enter) {
        if (options_.max_depth && depth_ >= *options_.max_depth) {
            stack_.push_back(Frame{nullptr, ts, line, ev.method});
            return;
        }
        // capped frames only sit above depth_ == max_depth, so the top is recorded here
        CctNode& parent = stack_.empty() ? *root_ : *stack_.back().node;
        CctNode& node = parent.child(ev.method);
        ++node.invocations;
        stack_.push_back(Frame{&node, ts, line, {}});
        ++depth_;
        return;
    }

    if (stack_.empty() || frame_method(stack_.back()) != ev.method) {
        if (options_.mode == BuildMode::Strict) {
            throw TraceError(line, with_line(line, "orphan exit of " + describe(ev.method, tid_) + " at ts " +
                                                       std::to_string(ev.ts)));
        }
        ++dropped_exits_;
        return;
    }
    Frame frame = std::move(stack_.back());
    stack_.pop_back();
    if (frame.node != nullptr) {
        frame.node->total_time += ts - frame.enter_ts;
        --depth_;
    }
}

CctNode CctBuilder::finish() {
    if (!stack_.empty()) {
        if (options_.mode == BuildMode::Strict) {
            const Frame& open = stack_.back();
            throw TraceError(open.line, with_line(open.line, "unmatched enter of " + describe(frame_method(open), tid_) +
                                                                 " (" + std::to_string(stack_.size()) +
                                                                 " frame(s) open at end of stream)"));
        }
        while (!stack_.empty()) {
            Frame& f = stack_.back();
            if (f.node != nullptr) {
                f.node->total_time += last_ts_ - f.enter_ts;
                f.node->truncated = true;
                ++truncated_frames_;
            }
            stack_.pop_back();
        }
        depth_ = 0;
    }
    Nanos busy = 0;
    for (const auto& c : root_->children) {
        busy += c.total_time;
    }
    root_->total_time = busy;
    CctNode out = std::move(*root_);
    root_ = std::make_unique<CctNode>();
    root_->method = root_label(tid_);
    root_->invocations = 1;
    seen_ = false;
    return out;
}

CctNode build_cct(std::span<const TraceEvent> events, BuildOptions options) {
    CctBuilder builder(events.empty() ? 0 : events.front().tid, options);
    for (const auto& ev : events) {
        builder.add(ev);
    }
    return builder.finish();
}

CctNode build_cct(const ThreadTrace& thread, BuildOptions options) {
    CctBuilder builder(thread.tid, options);
    for (const auto& ev : thread.events) {
        builder.add(ev);
    }
    return builder.finish();
}

Nanos self_time(const CctNode& node) noexcept {
    Nanos t = node.total_time;
    for (const auto& c : node.children) {
        t -= c.total_time;
    }
    return t;
}

CctForest build_forest(const Trace& trace, BuildOptions options) {
    CctForest forest;
    forest.roots.reserve(trace.threads.size());
    for (const auto& thread : trace.threads) {
        forest.roots.push_back(build_cct(thread, options));
    }
    return forest;
}

void merge_into(CctNode& dst, const CctNode& src) {
    dst.invocations += src.invocations;
    dst.total_time += src.total_time;
    dst.truncated = dst.truncated || src.truncated;
    for (const auto& c : src.children) {
        CctNode* existing = dst.find_child(c.method);
        if (existing == nullptr) {
            dst.children.push_back(c);
        } else {
            merge_into(*existing, c);
        }
    }
}

CctNode merge_ccts(const CctForest& forest) {
    CctNode merged;
    merged.method = std::string(kMergedRootLabel);
    for (const auto& root : forest.roots) {
        merge_into(merged, root);
    }
    merged.invocations = 1;
    return merged;
}

std::vector<CallGraphEdge> project_call_graph(const CctNode& root) {
    std::vector<CallGraphEdge> edges;
    std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>> index;
    std::vector<const CctNode*> todo{&root};
    while (!todo.empty()) {
        const CctNode* parent = todo.back();
        todo.pop_back();
        for (const auto& c : parent->children) {
            auto& slot = index[parent->method];
            auto it = slot.find(c.method);
            if (it == slot.end()) {
                slot.emplace(c.method, edges.size());
                edges.push_back(CallGraphEdge{parent->method, c.method, c.invocations, c.total_time});
            } else {
                edges[it->second].calls += c.invocations;
                edges[it->second].callee_total_time += c.total_time;
            }
        }
        for (auto it = parent->children.rbegin(); it != parent->children.rend(); ++it) {
            todo.push_back(&*it);
        }
    }
    return edges;
}

std::vector<std::string> folded_stacks(const CctNode& root) {
    std::vector<std::string> out;
    std::string prefix;
    fold(root, prefix, out);
    return out;
}

std::string serialize_cct(std::span<const CctNode> roots) {
    nlohmann::ordered_json doc;
    doc["schema"] = kCctSchema;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : roots) {
        arr.push_back(node_to_json(r));
    }
    doc["roots"] = std::move(arr);
    return doc.dump(1) + "\n";
}

std::string serialize_cct(const CctNode& root) {
    return serialize_cct(std::span<const CctNode>(&root, 1));
}

std::vector<CctNode> deserialize_cct(std::string_view document) {
    nlohmann::json doc = nlohmann::json::parse(document.begin(), document.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::runtime_error("CCT document: not a JSON object");
    }
    if (!doc.contains("schema") || doc["schema"] != kCctSchema) {
        throw std::runtime_error("CCT document: unsupported schema");
    }
    std::vector<CctNode> roots;
    try {
        for (const auto& r : doc.at("roots")) {
            roots.push_back(node_from_json(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("CCT document: ") + e.what());
    }
    return roots;
}

}  // namespace cctlens
