#include "cctlens/components.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace cctlens {

namespace {

constexpr std::string_view kContainer = "EJBContainer";

const char* const kStubbedBeans[] = {"EmployeeBean", "InterviewResultsBean", "HRProcessBean"};

}  // namespace

std::string_view to_string(Tier tier) noexcept {
    switch (tier) {
        case Tier::Web: return "web";
        case Tier::Business: return "business";
        case Tier::Dao: return "dao";
        case Tier::Middleware: return "middleware";
        case Tier::Other: return "other";
    }
    return "other";
}

Tier parse_tier(std::string_view label) {
    std::string lower(label);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (Tier t : {Tier::Web, Tier::Business, Tier::Dao, Tier::Middleware, Tier::Other}) {
        if (to_string(t) == lower) {
            return t;
        }
    }
    throw std::invalid_argument("unknown tier '" + std::string(label) + "'");
}

std::string declaring_type(std::string_view method) {
    method = method.substr(0, method.find('('));
    const auto member = method.rfind('.');
    if (member == std::string_view::npos) {
        return std::string(method);
    }
    auto type = method.substr(0, member);
    const auto dot = type.rfind('.');
    return std::string(dot == std::string_view::npos ? type : type.substr(dot + 1));
}

Classification ComponentCatalog::classify(std::string_view method) const {
    for (const auto& rule : rules_) {
        if (rule.pattern.matches(method)) {
            if (rule.component == kDeclaringType) {
                return {declaring_type(method), rule.tier};
            }
            return {rule.component, rule.tier};
        }
    }
    return {declaring_type(method), Tier::Other};
}

Classification classify(std::string_view method, const ComponentCatalog& catalog) {
    return catalog.classify(method);
}

ComponentCatalog ComponentCatalog::parse(std::istream& in) {
    std::vector<ComponentRule> rules;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) {
            fields.push_back(field);
        }
        if (fields.size() != 3) {
            throw std::invalid_argument("catalog line " + std::to_string(line_no) +
                                        ": expected tier<TAB>component<TAB>pattern");
        }
        try {
            rules.push_back(ComponentRule{FilterPattern(fields[2]), fields[1], parse_tier(fields[0])});
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("catalog line " + std::to_string(line_no) + ": " + e.what());
        }
        if (rules.back().component.empty()) {
            throw std::invalid_argument("catalog line " + std::to_string(line_no) + ": empty component label");
        }
    }
    return ComponentCatalog(std::move(rules));
}

ComponentCatalog ComponentCatalog::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open catalog file '" + path + "'");
    }
    return parse(in);
}

std::string ComponentCatalog::to_text() const {
    std::string out;
    for (const auto& r : rules_) {
        out += to_string(r.tier);
        out += '\t';
        out += r.component;
        out += '\t';
        out += r.pattern.text();
        if (r.pattern.is_prefix()) {
            out += '*';
        }
        out += '\n';
    }
    return out;
}

ComponentCatalog default_hr_catalog() {
    std::vector<ComponentRule> rules;
    auto add = [&rules](Tier tier, std::string_view component, std::string_view pattern) {
        rules.push_back(ComponentRule{FilterPattern(pattern), std::string(component), tier});
    };

    // Stubs and wrappers share the bean package, so they must precede the business rules.
    add(Tier::Middleware, kContainer, "com.sun.ejb.*");
    add(Tier::Middleware, kContainer, "javax.ejb.*");
    for (const char* bean : kStubbedBeans) {
        add(Tier::Middleware, kContainer, std::string("com.mycompany.hr.process._") + bean + "RemoteRemote_DynamicStub.*");
        add(Tier::Middleware, kContainer, std::string("com.mycompany.hr.process._") + bean + "RemoteRemoteWrapper.*");
    }

    add(Tier::Dao, kDeclaringType, "com.mycompany.hr.dao.*");

    add(Tier::Business, "EmployeeBean", "com.mycompany.hr.process.EmployeeBeanBean*");
    add(Tier::Business, "InterviewResultsBean", "com.mycompany.hr.process.InterviewResultsBean*");
    add(Tier::Business, "HRProcessBean", "com.mycompany.hr.process.HRProcessBean*");

    add(Tier::Web, kDeclaringType, "org.apache.jsp.*");
    add(Tier::Web, kDeclaringType, "com.mycompany.hr.servlet.*");
    add(Tier::Web, "HRProcessServlet", "com.mycompany.hr.process.HRProcessServlet*");
    return ComponentCatalog(std::move(rules));
}

std::vector<ComponentUtilizationRow> component_utilization(const std::vector<HotSpotRow>& rows,
                                                           const ComponentCatalog& catalog) {
    std::map<std::pair<std::string, Tier>, ComponentUtilizationRow> groups;
    Nanos sum = 0;
    for (const auto& row : rows) {
        auto cls = catalog.classify(row.method);
        auto& g = groups[{cls.component, cls.tier}];
        g.component = cls.component;
        g.tier = cls.tier;
        g.self_time += row.self_time;
        g.invocations += row.invocations;
        sum += row.self_time;
    }
    std::vector<ComponentUtilizationRow> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) {
        g.utilization_pct = sum == 0 ? 0.0 : static_cast<double>(g.self_time) / static_cast<double>(sum);
        out.push_back(std::move(g));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.self_time > b.self_time; });
    return out;
}

}  // namespace cctlens
