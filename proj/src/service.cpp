#include "crowdeval/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <random>
#include <regex>
#include <set>

namespace crowdeval {

using json = nlohmann::json;

namespace {

constexpr int kMaxRuns = 1000;

Reply json_reply(int status, const json& body) { return {status, "application/json", body.dump() + "\n"}; }

Reply error_reply(int status, const std::string& message, const json& extra = json::object()) {
    json body = extra;
    body["error"] = message;
    return json_reply(status, body);
}

std::string random_token() {
    std::random_device rd;
    std::string out;
    char buf[9];
    for (int i = 0; i < 4; ++i) {
        std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(rd()));
        out += buf;
    }
    return out;
}

bool plausible_id(const std::string& id) {
    static const std::regex pattern("[0-9a-f]{32}");
    return std::regex_match(id, pattern);
}

std::optional<long> env_number(const char* name) {
    const char* raw = std::getenv(name);
    if (!raw || !*raw) return std::nullopt;
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (*end != '\0' || v < 0) throw std::invalid_argument(std::string("bad value for ") + name + ": " + raw);
    return v;
}

// Strict reader for the params object; unknown keys are errors so typos do not pass silently.
void read_params(const json& params, RunOptions& options) {
    if (!params.is_object()) throw std::invalid_argument("params must be an object");
    for (const auto& [key, value] : params.items()) {
        if (key == "runs") {
            if (!value.is_number_integer()) throw std::invalid_argument("params.runs must be an integer");
            options.runs = value.get<int>();
        } else if (key == "seed") {
            if (!value.is_number_unsigned()) throw std::invalid_argument("params.seed must be a non-negative integer");
            options.seed = value.get<std::uint64_t>();
        } else if (key == "overrides") {
            if (!value.is_object()) throw std::invalid_argument("params.overrides must be an object");
            SimParams& p = options.params;
            const std::map<std::string, double*> fields{{"timestep", &p.timestep},
                                                        {"preferred_speed", &p.preferred_speed},
                                                        {"max_speed", &p.max_speed},
                                                        {"agent_radius", &p.agent_radius},
                                                        {"goal_reach_tolerance", &p.goal_reach_tolerance},
                                                        {"max_sim_time", &p.max_sim_time},
                                                        {"nav_cell", &p.nav_cell},
                                                        {"repulsion_gain", &p.repulsion_gain}};
            for (const auto& [name, v] : value.items()) {
                const auto it = fields.find(name);
                if (it == fields.end()) throw std::invalid_argument("params.overrides: unknown field '" + name + "'");
                if (!v.is_number()) throw std::invalid_argument("params.overrides." + name + " must be a number");
                *it->second = v.get<double>();
            }
        } else {
            throw std::invalid_argument("params: unknown field '" + key + "'");
        }
    }
    if (options.runs < 1 || options.runs > kMaxRuns) {
        throw std::invalid_argument("params.runs must be between 1 and " + std::to_string(kMaxRuns));
    }
    options.params.validate();
}

}  // namespace

const char* to_string(JobState state) {
    switch (state) {
        case JobState::Queued: return "queued";
        case JobState::Running: return "running";
        case JobState::Done: return "done";
        case JobState::Failed: return "failed";
    }
    return "unknown";
}

ServiceConfig service_config_from_env(ServiceConfig base) {
    if (const auto port = env_number("PORT")) base.port = static_cast<int>(*port);
    if (const auto workers = env_number("WORKERS")) base.workers = static_cast<unsigned>(*workers);
    if (const auto cap = env_number("MAX_AGENTS")) base.max_agents = *cap;
    if (const char* dir = std::getenv("RESULTS_DIR"); dir && *dir) base.results_dir = dir;
    return base;
}

Service::Service(ServiceConfig config) : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
    const unsigned n = config_.workers ? config_.workers : std::max(1u, std::thread::hardware_concurrency());
    for (unsigned i = 0; i < n; ++i) workers_.emplace_back([this] { work(); });
    install_routes();
}

Service::~Service() {
    stop();
    for (std::thread& t : workers_) t.join();
}

void Service::stop() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    queue_ready_.notify_all();
    server_->stop();
}

Reply Service::submit(const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) return error_reply(400, "request body must be a JSON object");

    // Either {scenario, params} or a bare scenario document. A client-side "comparable" flag is
    // accepted for compatibility and ignored.
    json scenario_doc;
    RunOptions options;
    options.workers = 1;
    try {
        if (doc.contains("scenario")) {
            for (const auto& [key, value] : doc.items()) {
                if (key != "scenario" && key != "params" && key != "comparable") {
                    throw std::invalid_argument("unknown field '" + key + "'");
                }
            }
            scenario_doc = doc.at("scenario");
            if (doc.contains("params")) read_params(doc.at("params"), options);
        } else {
            scenario_doc = doc;
        }
    } catch (const std::exception& e) {
        return error_reply(400, e.what());
    }

    Scenario scenario;
    try {
        scenario = parse_scenario(scenario_doc.dump());
    } catch (const ScenarioParseError& e) {
        return error_reply(400, e.what(), {{"path", e.path()}});
    }

    long agents = 0;
    for (const Configuration& c : scenario.configurations) agents += c.total_agents();
    if (agents > config_.max_agents) {
        return error_reply(413, "agent total " + std::to_string(agents) + " exceeds limit " +
                                    std::to_string(config_.max_agents));
    }
    if (scenario.configurations.size() > kMaxConfigurations) {
        return error_reply(400, "at most " + std::to_string(kMaxConfigurations) + " configurations are supported");
    }
    json violations = json::array();
    for (const Configuration& c : scenario.configurations) {
        for (const std::string& v : validate_configuration(c, options.params).violations) {
            violations.push_back("configuration '" + c.id + "': " + v);
        }
    }
    if (!violations.empty()) return error_reply(400, "validation failed", {{"violations", violations}});

    auto job = std::make_shared<Job>();
    job->scenario = std::move(scenario);
    job->options = std::move(options);
    job->configs_total = static_cast<int>(job->scenario.configurations.size());
    {
        std::lock_guard lock(mutex_);
        do job->id = random_token();
        while (jobs_.count(job->id));
        jobs_.emplace(job->id, job);
        queue_.push_back(job);
    }
    queue_ready_.notify_one();
    return json_reply(202, {{"job_id", job->id}});
}

std::shared_ptr<Service::Job> Service::find(const std::string& id) const {
    {
        std::lock_guard lock(mutex_);
        if (const auto it = jobs_.find(id); it != jobs_.end()) return it->second;
    }
    return restore(id);
}

// Jobs finished by an earlier process are served from RESULTS_DIR.
std::shared_ptr<Service::Job> Service::restore(const std::string& id) const {
    if (!config_.results_dir || !plausible_id(id)) return nullptr;
    const std::filesystem::path dir = *config_.results_dir / id;
    if (!std::filesystem::exists(dir / "manifest.json")) return nullptr;
    auto job = std::make_shared<Job>();
    try {
        job->id = id;
        job->manifest = read_file(dir / "manifest.json");
        const json doc = json::parse(job->manifest);
        for (const json& c : doc.at("configurations")) {
            const std::string cid = c.at("id").get<std::string>();
            const json& files = c.at("files");
            job->occupancy_pgm[cid] = read_file(dir / files.at("occupancy_pgm").get<std::string>());
            job->trajectories_csv[cid] = read_file(dir / files.at("trajectories").get<std::string>());
        }
        job->configs_total = job->configs_done = static_cast<int>(doc.at("configurations").size());
        job->state = JobState::Done;
    } catch (const std::exception&) {
        return nullptr;
    }
    std::lock_guard lock(mutex_);
    return jobs_.emplace(id, job).first->second;
}

Reply Service::status(const std::string& job_id) const {
    const auto job = find(job_id);
    if (!job) return error_reply(404, "unknown job");
    std::lock_guard lock(mutex_);
    json body{{"id", job->id},
              {"state", to_string(job->state)},
              {"progress", {{"done", job->configs_done}, {"total", job->configs_total}}}};
    if (job->state == JobState::Failed) {
        body["error"] = job->error;
        if (!job->error_details.empty()) body["details"] = job->error_details;
    }
    return json_reply(200, body);
}

Reply Service::results(const std::string& job_id) const {
    const auto job = find(job_id);
    if (!job) return error_reply(404, "unknown job");
    std::lock_guard lock(mutex_);
    if (job->state != JobState::Done) {
        return error_reply(409, "results not ready", {{"state", to_string(job->state)}});
    }
    return {200, "application/json", job->manifest};
}

Reply Service::artifact(const std::string& job_id, const std::string& config_id, bool occupancy) const {
    const auto job = find(job_id);
    if (!job) return error_reply(404, "unknown job");
    std::lock_guard lock(mutex_);
    if (job->state != JobState::Done) {
        return error_reply(409, "results not ready", {{"state", to_string(job->state)}});
    }
    const auto& store = occupancy ? job->occupancy_pgm : job->trajectories_csv;
    const auto it = store.find(config_id);
    if (it == store.end()) return error_reply(404, "unknown configuration '" + config_id + "'");
    return {200, occupancy ? "image/x-portable-graymap" : "text/csv", it->second};
}

Reply Service::occupancy(const std::string& job_id, const std::string& config_id) const {
    return artifact(job_id, config_id, true);
}

Reply Service::trajectories(const std::string& job_id, const std::string& config_id) const {
    return artifact(job_id, config_id, false);
}

bool Service::wait(const std::string& job_id, std::chrono::milliseconds timeout) const {
    const auto job = find(job_id);
    if (!job) return false;
    std::unique_lock lock(mutex_);
    return changed_.wait_for(lock, timeout,
                             [&] { return job->state == JobState::Done || job->state == JobState::Failed; });
}

void Service::work() {
    for (;;) {
        std::shared_ptr<Job> job;
        {
            std::unique_lock lock(mutex_);
            queue_ready_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            job = queue_.front();
            queue_.pop_front();
            job->state = JobState::Running;
        }
        changed_.notify_all();
        execute(job);
        changed_.notify_all();
    }
}

void Service::execute(const std::shared_ptr<Job>& job) {
    RunOptions options = job->options;
    options.on_configuration_done = [this, job](int done, int) {
        std::lock_guard lock(mutex_);
        job->configs_done = done;
    };
    try {
        const ResultsBundle bundle = run_scenario(job->scenario, options);
        std::string manifest = manifest_json(bundle);
        std::map<std::string, std::string> pgm, csv;
        for (const ConfigurationResult& c : bundle.configurations) {
            pgm[c.id] = occupancy_pgm(c.occupancy);
            csv[c.id] = trajectories_csv(c.trajectories);
        }
        if (config_.results_dir) save_results(bundle, *config_.results_dir / job->id);
        std::lock_guard lock(mutex_);
        job->manifest = std::move(manifest);
        job->occupancy_pgm = std::move(pgm);
        job->trajectories_csv = std::move(csv);
        job->state = JobState::Done;
    } catch (const IncompleteRunError& e) {
        std::lock_guard lock(mutex_);
        job->error = "simulation incomplete";
        job->error_details = e.details();
        job->state = JobState::Failed;
    } catch (const std::exception& e) {
        std::lock_guard lock(mutex_);
        job->error = e.what();
        job->state = JobState::Failed;
    }
}

void Service::install_routes() {
    httplib::Server& srv = *server_;
    srv.set_payload_max_length(16u << 20);
    srv.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    auto send = [](httplib::Response& res, const Reply& reply) {
        res.status = reply.status;
        res.set_content(reply.body, reply.content_type);
    };
    srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    srv.Post("/api/scenarios/run", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, submit(req.body));
    });
    srv.Get(R"(/api/jobs/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, status(req.matches[1]));
    });
    srv.Get(R"(/api/jobs/([^/]+)/results)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, results(req.matches[1]));
    });
    srv.Get(R"(/api/jobs/([^/]+)/configs/([^/]+)/occupancy)",
            [this, send](const httplib::Request& req, httplib::Response& res) {
                send(res, occupancy(req.matches[1], req.matches[2]));
            });
    srv.Get(R"(/api/jobs/([^/]+)/configs/([^/]+)/trajectories)",
            [this, send](const httplib::Request& req, httplib::Response& res) {
                send(res, trajectories(req.matches[1], req.matches[2]));
            });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) res.set_content(json{{"error", httplib::status_message(res.status)}}.dump() + "\n", "application/json");
    });
}

int Service::bind() {
    const int port = config_.port == 0 ? server_->bind_to_any_port(config_.host)
                                       : (server_->bind_to_port(config_.host, config_.port) ? config_.port : -1);
    if (port < 0) throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    return port;
}

void Service::listen() { server_->listen_after_bind(); }

}  // namespace crowdeval
