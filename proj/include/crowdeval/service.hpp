#pragma once

#include "crowdeval/results_io.hpp"
#include "crowdeval/runner.hpp"

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace crowdeval {

struct ServiceConfig {
    std::string host = "0.0.0.0";
    int port = 8080;
    unsigned workers = 0;  // 0: one per hardware thread
    std::optional<std::filesystem::path> results_dir;
    long max_agents = 10000;
    std::string cors_origin = "*";
};

/// PORT, WORKERS, RESULTS_DIR and MAX_AGENTS override the defaults.
ServiceConfig service_config_from_env(ServiceConfig base = {});

enum class JobState { Queued, Running, Done, Failed };
const char* to_string(JobState state);

struct Reply {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Job store, FIFO worker pool and HTTP front end. The request handlers are public so they can
/// be exercised without a socket.
class Service {
public:
    explicit Service(ServiceConfig config = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    Reply submit(const std::string& body);
    Reply status(const std::string& job_id) const;
    Reply results(const std::string& job_id) const;
    Reply occupancy(const std::string& job_id, const std::string& config_id) const;
    Reply trajectories(const std::string& job_id, const std::string& config_id) const;

    /// Blocks until the job leaves queued/running or the timeout expires. False on timeout or unknown id.
    bool wait(const std::string& job_id, std::chrono::milliseconds timeout) const;

    /// Binds the listening socket; port 0 picks a free one. Returns the bound port.
    int bind();
    /// Serves until stop(). Requires bind().
    void listen();
    void stop();

    const ServiceConfig& config() const { return config_; }

private:
    struct Job {
        std::string id;
        Scenario scenario;
        RunOptions options;
        JobState state = JobState::Queued;
        int configs_done = 0;
        int configs_total = 0;
        std::string error;
        std::vector<std::string> error_details;
        std::string manifest;
        std::map<std::string, std::string> occupancy_pgm;
        std::map<std::string, std::string> trajectories_csv;
    };

    std::shared_ptr<Job> find(const std::string& id) const;
    std::shared_ptr<Job> restore(const std::string& id) const;
    void work();
    void execute(const std::shared_ptr<Job>& job);
    Reply artifact(const std::string& job_id, const std::string& config_id, bool occupancy) const;
    void install_routes();

    ServiceConfig config_;
    mutable std::mutex mutex_;
    mutable std::condition_variable changed_;
    std::condition_variable queue_ready_;
    mutable std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::deque<std::shared_ptr<Job>> queue_;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace crowdeval
