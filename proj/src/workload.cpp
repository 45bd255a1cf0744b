#include "cctlens/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "cctlens/digest.hpp"

namespace cctlens {

namespace {

// Method names as they appear in the 20-user hot-spot table, whitespace removed.
namespace m {
constexpr const char* kReq = "(javax.servlet.http.HttpServletRequest,javax.servlet.http.HttpServletResponse)";
constexpr const char* kCp = "(com.mycompany.hr.vo.CandidateProfile)";
constexpr const char* kEc = "(com.mycompany.hr.vo.EmployeeCredentials)";
constexpr const char* kIr = "(com.mycompany.hr.vo.InterviewResult)";
constexpr const char* kStr = "(java.lang.String)";

const std::string kStub = "com.mycompany.hr.process._EmployeeBeanRemoteRemote_DynamicStub.";
const std::string kWrapper = "com.mycompany.hr.process._EmployeeBeanRemoteRemoteWrapper.";
const std::string kBean = "com.mycompany.hr.process.EmployeeBeanBean.";
const std::string kEmpDao = "com.mycompany.hr.dao.EmployeeDAO.";

const std::string get_connection = "com.mycompany.hr.dao.BaseDAO.getConnection()";
const std::string base_dao_init = "com.mycompany.hr.dao.BaseDAO.<init>()";
const std::string emp_dao_init = kEmpDao + "<init>()";
const std::string dao_add_profile = kEmpDao + "addCandidateProfile" + kCp;
const std::string dao_add_credentials = kEmpDao + "addEmployeeCredentials" + kEc;
const std::string dao_authenticate = kEmpDao + "authenticateEmployee" + kEc;
const std::string login_jsp = std::string("org.apache.jsp.Login_jsp._jspService") + kReq;
const std::string stub_add_profile = kStub + "addCandidateProfile" + kCp;
const std::string stub_authenticate = kStub + "authenticate" + kEc;
const std::string stub_add_credentials = kStub + "addEmployeeCredentials" + kEc;
const std::string stub_init = kStub + "<init>()";
const std::string hr_servlet_process = std::string("com.mycompany.hr.process.HRProcessServlet.processRequest") + kReq;
const std::string hr_servlet_get = std::string("com.mycompany.hr.servlet.HRProcessServlet.doGet") + kReq;
const std::string hr_servlet_init = "com.mycompany.hr.servlet.HRProcessServlet.<init>()";
const std::string add_candidate_jsp = std::string("org.apache.jsp.AddCandidate_jsp._jspService") + kReq;
const std::string login_servlet_process = std::string("org.apache.jsp.LoginServlet.processRequest") + kReq;
const std::string login_servlet_post = std::string("com.mycompany.hr.servlet.LoginServlet.doPost") + kReq;
const std::string login_servlet_init = "com.mycompany.hr.servlet.LoginServlet.<init>()";
const std::string welcome_jsp = std::string("org.apache.jsp.Welcome_jsp._jspService") + kReq;
const std::string view_profile_jsp = std::string("org.apache.jsp.ViewProfile_jsp._jspService") + kReq;
const std::string bean_authenticate = kBean + "authenticate" + kEc;
const std::string bean_add_credentials = kBean + "addCredentials" + kEc;
const std::string bean_add_profile = kBean + "addCandidateProfile" + kCp;
const std::string credentials_init = "com.mycompany.hr.vo.EmployeeCredentials.<init>()";
const std::string profile_init = "com.mycompany.hr.vo.CandidateProfile.<init>()";
const std::string wrapper_add_profile = kWrapper + "addCandidateProfile" + kCp;
const std::string wrapper_add_credentials = kWrapper + "addEmployeeCredentials" + kEc;
const std::string wrapper_authenticate = kWrapper + "authenticate" + kEc;
const std::string wrapper_init = kWrapper + "<init>()";

const std::string register_jsp = std::string("org.apache.jsp.Register_jsp._jspService") + kReq;
const std::string registration_servlet = std::string("com.mycompany.hr.servlet.RegistrationServlet.processRequest") + kReq;
const std::string interview_info_jsp = std::string("org.apache.jsp.InterviewInfo_jsp._jspService") + kReq;
const std::string interview_servlet = std::string("com.mycompany.hr.servlet.InterviewResultServlet.processRequest") + kReq;
const std::string interview_result_init = "com.mycompany.hr.vo.InterviewResult.<init>()";
const std::string results_bean_add = std::string("com.mycompany.hr.process.InterviewResultsBean.addInterviewResults") + kIr;
const std::string results_bean_view = std::string("com.mycompany.hr.process.InterviewResultsBean.viewInterviewResults") + kStr;
const std::string interview_dao_init = "com.mycompany.hr.dao.InterviewDAO.<init>()";
const std::string interview_dao_add = std::string("com.mycompany.hr.dao.InterviewDAO.addInterviewResult") + kIr;
const std::string interview_dao_get = std::string("com.mycompany.hr.dao.InterviewDAO.getInterviewResult") + kStr;
const std::string recruitment_jsp = std::string("org.apache.jsp.Recruitment_jsp._jspService") + kReq;
const std::string hr_bean_recruit = std::string("com.mycompany.hr.process.HRProcessBean.recruit") + kStr;
const std::string hr_dao_init = "com.mycompany.hr.dao.HRDAO.<init>()";
const std::string hr_dao_recruit = std::string("com.mycompany.hr.dao.HRDAO.recruitEmployee") + kStr;
const std::string view_result_jsp = std::string("org.apache.jsp.ViewResult_jsp._jspService") + kReq;
}  // namespace m

FrameTemplate f(const std::string& method, std::vector<FrameTemplate> calls = {}) {
    return FrameTemplate{method, std::move(calls)};
}

// A DAO is constructed (running BaseDAO's constructor) before each data call.
std::vector<FrameTemplate> dao_call(const std::string& dao_init, const std::string& dao_method) {
    return {f(dao_init, {f(m::base_dao_init)}), f(dao_method, {f(m::get_connection)})};
}

std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::size_t count_frames(const FrameTemplate& t) noexcept {
    std::size_t n = 1;
    for (const auto& c : t.calls) {
        n += count_frames(c);
    }
    return n;
}

struct Emitted {
    Nanos ts;
    bool enter;
    const std::string* method;
};

struct Expander {
    const WorkloadSpec& spec;
    std::string_view use_case;
    std::uint64_t execution;
    std::uint64_t frame = 0;

    void run(const FrameTemplate& t, Nanos& clock, std::vector<Emitted>& out) {
        const double u = spec.latency.jitter == 0.0 ? 0.5 : keyed_uniform(spec.seed, use_case, execution, frame);
        ++frame;
        out.push_back(Emitted{clock, true, &t.method});
        clock += spec.latency.realize(t.method, u);
        for (const auto& c : t.calls) {
            run(c, clock, out);
        }
        out.push_back(Emitted{clock, false, &t.method});
    }
};

void validate(const WorkloadSpec& spec, const std::map<std::string, CallChain>& catalog) {
    if (spec.thread_count < 1) {
        throw WorkloadError("thread count must be at least 1");
    }
    if (!(spec.latency.jitter >= 0.0 && spec.latency.jitter < 1.0)) {
        throw WorkloadError("jitter must lie in [0, 1)");
    }
    if (spec.latency.default_base < 0) {
        throw WorkloadError("default base duration must be non-negative");
    }
    for (const auto& [method, ns] : spec.latency.base) {
        if (ns < 0) {
            throw WorkloadError("negative base duration for '" + method + "'");
        }
    }
    for (const auto& [name, count] : spec.executions) {
        if (catalog.find(name) == catalog.end()) {
            std::string known;
            for (const auto& [k, v] : catalog) {
                known += known.empty() ? k : ", " + k;
            }
            throw WorkloadError("unknown use case '" + name + "' (known: " + known + ")");
        }
    }
}

}  // namespace

std::size_t CallChain::frame_count() const noexcept {
    std::size_t n = 0;
    for (const auto& r : requests) {
        n += count_frames(r);
    }
    return n;
}

Nanos LatencyModel::base_for(std::string_view method) const {
    auto it = base.find(method);
    return it == base.end() ? default_base : it->second;
}

Nanos LatencyModel::realize(std::string_view method, double u) const {
    const Nanos b = base_for(method);
    if (jitter == 0.0 || b == 0) {
        return b;
    }
    const double factor = 1.0 + jitter * (2.0 * u - 1.0);
    return std::max<Nanos>(0, std::llround(static_cast<double>(b) * factor));
}

std::map<std::string, CallChain> hr_scenarios() {
    std::map<std::string, CallChain> s;

    auto remote = [](const std::string& stub, const std::string& wrapper, const std::string& bean,
                     std::vector<FrameTemplate> body) { return f(stub, {f(wrapper, {f(bean, std::move(body))})}); };

    s["register"] = CallChain{
        "register",
        {f(m::register_jsp,
           {f(m::registration_servlet,
              {f(m::profile_init), f(m::profile_init),
               remote(m::stub_add_profile, m::wrapper_add_profile, m::bean_add_profile,
                      dao_call(m::emp_dao_init, m::dao_add_profile)),
               f(m::credentials_init), f(m::credentials_init),
               remote(m::stub_add_credentials, m::wrapper_add_credentials, m::bean_add_credentials,
                      dao_call(m::emp_dao_init, m::dao_add_credentials))})})}};

    s["login"] = CallChain{
        "login",
        {f(m::login_jsp),
         f(m::login_jsp,
           {f(m::login_servlet_post,
              {f(m::login_servlet_process,
                 {f(m::credentials_init), f(m::credentials_init),
                  remote(m::stub_authenticate, m::wrapper_authenticate, m::bean_authenticate,
                         dao_call(m::emp_dao_init, m::dao_authenticate))})})})}};

    s["add_interview_result"] = CallChain{
        "add_interview_result",
        {f(m::interview_info_jsp,
           {f(m::interview_servlet,
              {f(m::interview_result_init),
               f(m::results_bean_add, dao_call(m::interview_dao_init, m::interview_dao_add))})})}};

    s["recruit"] = CallChain{
        "recruit",
        {f(m::recruitment_jsp,
           {f(m::hr_servlet_get,
              {f(m::hr_servlet_process, {f(m::hr_bean_recruit, dao_call(m::hr_dao_init, m::hr_dao_recruit))})})})}};

    s["view_result"] = CallChain{
        "view_result",
        {f(m::view_result_jsp, {f(m::results_bean_view, dao_call(m::interview_dao_init, m::interview_dao_get))})}};
    return s;
}

std::map<std::string, CallChain> page_traffic_scenarios() {
    std::map<std::string, CallChain> s;
    s["add_candidate_page"] = CallChain{"add_candidate_page", {f(m::add_candidate_jsp)}};
    s["hr_process_page"] = CallChain{"hr_process_page", {f(m::hr_servlet_get, {f(m::hr_servlet_process)})}};
    s["welcome_page"] = CallChain{"welcome_page", {f(m::welcome_jsp)}};
    s["view_profile_page"] = CallChain{"view_profile_page", {f(m::view_profile_jsp)}};
    s["container_startup"] = CallChain{
        "container_startup",
        {f(m::login_servlet_init), f(m::hr_servlet_init), f(m::stub_init), f(m::wrapper_init), f(m::wrapper_init)}};
    return s;
}

std::map<std::string, CallChain> scenario_catalog() {
    auto all = hr_scenarios();
    all.merge(page_traffic_scenarios());
    return all;
}

std::map<std::string, Nanos, std::less<>> figure8_base_durations() {
    // (method, row self total in ns, row invocations)
    const std::tuple<const std::string&, Nanos, Nanos> rows[] = {
        {m::get_connection, 1'267'000'000, 50},
        {m::dao_add_profile, 946'000'000, 20},
        {m::dao_add_credentials, 624'000'000, 20},
        {m::dao_authenticate, 85'800'000, 10},
        {m::login_jsp, 54'600'000, 20},
        {m::stub_add_profile, 30'800'000, 20},
        {m::stub_authenticate, 15'200'000, 10},
        {m::hr_servlet_process, 13'300'000, 22},
        {m::stub_add_credentials, 8'700'000, 20},
        {m::add_candidate_jsp, 5'470'000, 23},
        {m::login_servlet_process, 3'210'000, 10},
        {m::welcome_jsp, 1'860'000, 6},
        {m::bean_authenticate, 1'170'000, 10},
        {m::view_profile_jsp, 856'000, 3},
        {m::hr_servlet_get, 368'000, 22},
        {m::base_dao_init, 235'000, 50},
        {m::emp_dao_init, 195'000, 50},
        {m::bean_add_credentials, 195'000, 20},
        {m::login_servlet_post, 177'000, 10},
        {m::bean_add_profile, 175'000, 20},
        {m::credentials_init, 117'000, 60},
        {m::wrapper_add_profile, 114'000, 20},
        {m::wrapper_add_credentials, 109'000, 20},
        {m::profile_init, 104'000, 40},
        {m::wrapper_authenticate, 68'000, 10},
        {m::wrapper_init, 66'000, 2},
        {m::login_servlet_init, 33'000, 1},
        {m::stub_init, 28'000, 1},
        {m::hr_servlet_init, 26'000, 1},
    };
    std::map<std::string, Nanos, std::less<>> base;
    for (const auto& [method, total, calls] : rows) {
        base.emplace(method, (total + calls / 2) / calls);
    }
    // absent from the 20-user table
    base.emplace(m::register_jsp, 0);
    base.emplace(m::registration_servlet, 0);
    return base;
}

WorkloadSpec figure8_preset() {
    WorkloadSpec spec;
    spec.executions = {{"container_startup", 1}, {"register", 20},        {"login", 10},
                       {"add_candidate_page", 23}, {"hr_process_page", 22}, {"welcome_page", 6},
                       {"view_profile_page", 3}};
    spec.seed = 0;
    spec.latency.base = figure8_base_durations();
    spec.latency.default_base = 0;
    spec.latency.jitter = 0.0;
    spec.thread_count = 1;
    return spec;
}

WorkloadSpec load_preset(std::uint64_t users, double jitter, std::uint64_t seed) {
    WorkloadSpec spec;
    for (const char* uc : {"register", "login", "add_interview_result", "recruit", "view_result"}) {
        spec.executions.emplace_back(uc, users);
    }
    spec.seed = seed;
    spec.latency.base = figure8_base_durations();
    spec.latency.base.erase(m::register_jsp);
    spec.latency.base.erase(m::registration_servlet);
    spec.latency.default_base = 1'000'000;
    spec.latency.jitter = jitter;
    spec.thread_count = static_cast<std::uint32_t>(std::max<std::uint64_t>(1, users));
    return spec;
}

double keyed_uniform(std::uint64_t seed, std::string_view use_case, std::uint64_t execution,
                     std::uint64_t frame) noexcept {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ fnv1a(use_case));
    h = mix64(h ^ execution);
    h = mix64(h ^ frame);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

SimulationSummary simulate(const WorkloadSpec& spec, std::ostream& out) {
    const auto catalog = scenario_catalog();
    validate(spec, catalog);

    std::vector<std::vector<Emitted>> per_tid(spec.thread_count);
    std::vector<Nanos> clock(spec.thread_count, 0);
    std::uint64_t global = 0;
    for (const auto& [name, count] : spec.executions) {
        const CallChain& chain = catalog.at(name);
        for (std::uint64_t i = 0; i < count; ++i, ++global) {
            const std::size_t slot = global % spec.thread_count;
            Expander ex{spec, name, i};
            for (const auto& request : chain.requests) {
                ex.run(request, clock[slot], per_tid[slot]);
            }
        }
    }

    Sha256 digest;
    SimulationSummary summary;
    std::string line;
    auto write = [&](std::string_view s) {
        out << s;
        digest.update(s);
    };
    {
        std::ostringstream header;
        header << "# cct-lens trace v1\n"
               << "# simulated seed=" << spec.seed << " jitter=" << spec.latency.jitter
               << " threads=" << spec.thread_count << "\n";
        write(header.str());
    }

    // k-way merge by (ts, tid, per-thread position)
    using Key = std::tuple<Nanos, std::size_t, std::size_t>;
    std::priority_queue<Key, std::vector<Key>, std::greater<>> heap;
    for (std::size_t t = 0; t < per_tid.size(); ++t) {
        if (!per_tid[t].empty()) {
            heap.emplace(per_tid[t][0].ts, t, 0);
        }
    }
    TraceEvent ev;
    while (!heap.empty()) {
        auto [ts, t, idx] = heap.top();
        heap.pop();
        const Emitted& e = per_tid[t][idx];
        ev.ts = e.ts;
        ev.tid = t + 1;
        ev.kind = e.enter ? EventKind::Enter : EventKind::Exit;
        ev.method = *e.method;
        line = format_trace_event(ev);
        line += '\n';
        write(line);
        ++summary.event_count;
        if (idx + 1 < per_tid[t].size()) {
            heap.emplace(per_tid[t][idx + 1].ts, t, idx + 1);
        }
    }
    summary.digest = digest.hex();
    return summary;
}

std::string simulate(const WorkloadSpec& spec) {
    std::ostringstream out;
    simulate(spec, out);
    return out.str();
}

WorkloadSpec parse_workload_spec(std::string_view document) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::parse(document.begin(), document.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw WorkloadError("workload spec: not a JSON object");
    }
    static const char* const known[] = {"executions", "seed",    "jitter", "threads",
                                        "base_preset", "default_base_ns", "base_ns"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known)) {
            throw WorkloadError("workload spec: unknown key '" + key + "'");
        }
    }

    WorkloadSpec spec;
    try {
        if (doc.contains("base_preset")) {
            const auto preset = doc["base_preset"].get<std::string>();
            if (preset != "figure8") {
                throw WorkloadError("workload spec: unknown base_preset '" + preset + "'");
            }
            spec.latency.base = figure8_base_durations();
        }
        if (doc.contains("executions")) {
            for (const auto& [name, count] : doc["executions"].items()) {
                if (!count.is_number_unsigned()) {
                    throw WorkloadError("workload spec: execution count for '" + name + "' must be >= 0");
                }
                spec.executions.emplace_back(name, count.get<std::uint64_t>());
            }
        }
        if (doc.contains("seed")) {
            spec.seed = doc["seed"].get<std::uint64_t>();
        }
        if (doc.contains("jitter")) {
            spec.latency.jitter = doc["jitter"].get<double>();
        }
        if (doc.contains("threads")) {
            spec.thread_count = doc["threads"].get<std::uint32_t>();
        }
        if (doc.contains("default_base_ns")) {
            spec.latency.default_base = doc["default_base_ns"].get<Nanos>();
        }
        if (doc.contains("base_ns")) {
            for (const auto& [method, ns] : doc["base_ns"].items()) {
                spec.latency.base[method] = ns.get<Nanos>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw WorkloadError(std::string("workload spec: ") + e.what());
    }
    validate(spec, scenario_catalog());
    return spec;
}

WorkloadSpec load_workload_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw WorkloadError("cannot open workload spec '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_workload_spec(ss.str());
}

std::string workload_spec_to_json(const WorkloadSpec& spec) {
    nlohmann::ordered_json doc;
    doc["executions"] = nlohmann::ordered_json::object();
    for (const auto& [name, count] : spec.executions) {
        doc["executions"][name] = count;
    }
    doc["seed"] = spec.seed;
    doc["jitter"] = spec.latency.jitter;
    doc["threads"] = spec.thread_count;
    doc["default_base_ns"] = spec.latency.default_base;
    doc["base_ns"] = nlohmann::ordered_json::object();
    for (const auto& [method, ns] : spec.latency.base) {
        doc["base_ns"][method] = ns;
    }
    return doc.dump(2) + "\n";
}

}  // namespace cctlens
