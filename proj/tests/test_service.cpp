#include "support.hpp"

#include "crowdeval/service.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <thread>

using namespace testing;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

json fixture_doc(const std::string& name) { return json::parse(read_file(fixture_path(name))); }

json request(const std::string& name, int runs, std::uint64_t seed = 0) {
    return {{"scenario", fixture_doc(name)}, {"params", {{"runs", runs}, {"seed", seed}}}};
}

std::string submit_ok(Service& service, const json& body) {
    const Reply r = service.submit(body.dump());
    REQUIRE_MESSAGE(r.status == 202, r.body);
    return json::parse(r.body).at("job_id").get<std::string>();
}

ServiceConfig small_config() {
    ServiceConfig c;
    c.port = 0;
    c.host = "127.0.0.1";
    c.workers = 2;
    return c;
}

// Service listening on a free port for the lifetime of the object.
struct LiveService {
    Service service;
    int port;
    std::thread thread;
    explicit LiveService(ServiceConfig c) : service(std::move(c)), port(service.bind()) {
        thread = std::thread([this] { service.listen(); });
    }
    ~LiveService() {
        service.stop();
        thread.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(30, 0);
        return c;
    }
};

}  // namespace

TEST_CASE("submit, poll and fetch results") {
    Service service(small_config());
    const std::string id = submit_ok(service, request("s3.json", 2));
    CHECK(id.size() == 32);
    const json first = json::parse(service.status(id).body);
    CHECK((first["state"] == "queued" || first["state"] == "running" || first["state"] == "done"));
    CHECK(first["progress"]["total"] == 3);

    REQUIRE(service.wait(id, 60s));
    const json done = json::parse(service.status(id).body);
    CHECK(done["state"] == "done");
    CHECK(done["progress"]["done"] == 3);

    const Reply results = service.results(id);
    REQUIRE(results.status == 200);
    const json manifest = json::parse(results.body);
    CHECK(manifest["comparable"] == true);
    CHECK(manifest["ranking"]["phi"].size() == 3);
    CHECK(manifest["configurations"][0]["records"].size() == 2);

    // repeated reads return the same bytes
    CHECK(service.results(id).body == results.body);
    CHECK(service.status(id).body == service.status(id).body);
}

TEST_CASE("service jobs match a direct run") {
    Service service(small_config());
    const std::string a = submit_ok(service, request("s3.json", 2, 5));
    const std::string b = submit_ok(service, request("s4.json", 2, 5));
    REQUIRE(service.wait(a, 60s));
    REQUIRE(service.wait(b, 60s));
    for (const auto& [id, name] : {std::pair{a, "s3.json"}, std::pair{b, "s4.json"}}) {
        RunOptions options;
        options.runs = 2;
        options.seed = 5;
        options.workers = 1;
        CHECK(service.results(id).body == manifest_json(run_scenario(fixture(name), options)));
    }
}

TEST_CASE("bare scenario body uses defaults") {
    Service service(small_config());
    const std::string id = submit_ok(service, fixture_doc("s3.json"));
    REQUIRE(service.wait(id, 60s));
    CHECK(json::parse(service.results(id).body)["runs"] == 1);
}

TEST_CASE("server decides comparability") {
    Service service(small_config());
    json body = request("s3.json", 1);
    body["comparable"] = true;
    json extra = body["scenario"]["configurations"][1]["goals"][0];
    extra["id"] = "side";
    extra["center"] = {{"x", 1.5}, {"y", 28.5}};
    body["scenario"]["configurations"][1]["goals"].push_back(extra);
    const std::string id = submit_ok(service, body);
    REQUIRE(service.wait(id, 60s));
    const json manifest = json::parse(service.results(id).body);
    CHECK(manifest["comparable"] == false);
    CHECK_FALSE(manifest.contains("ranking"));
    CHECK_FALSE(manifest["configurations"][0]["aggregate"].contains("phi"));
    const std::string details = manifest["comparability"]["details"].dump();
    CHECK(details.find("goal") != std::string::npos);
}

TEST_CASE("rejected submissions") {
    ServiceConfig cfg = small_config();
    cfg.max_agents = 150;
    Service service(cfg);

    CHECK(service.submit("{oops").status == 400);
    CHECK(service.submit("[1,2]").status == 400);
    CHECK(service.submit(json{{"scenario", fixture_doc("s3.json")}, {"extra", 1}}.dump()).status == 400);

    json bad_runs = request("s3.json", 0);
    CHECK(service.submit(bad_runs.dump()).status == 400);
    bad_runs["params"]["runs"] = "ten";
    CHECK(service.submit(bad_runs.dump()).status == 400);
    json bad_param = request("s3.json", 1);
    bad_param["params"]["warp"] = 9;
    CHECK(service.submit(bad_param.dump()).status == 400);
    bad_param = request("s3.json", 1);
    bad_param["params"]["overrides"] = {{"timestep", -0.1}};
    CHECK(service.submit(bad_param.dump()).status == 400);

    json dangling = fixture_doc("s3.json");
    dangling["configurations"][0]["spawn_areas"][0]["goal_id"] = "nowhere";
    const Reply parse = service.submit(dangling.dump());
    CHECK(parse.status == 400);
    CHECK(json::parse(parse.body)["path"] == "configurations[0].spawn_areas[0].goal_id");

    json outside = fixture_doc("s3.json");
    outside["configurations"][2]["goals"][0]["center"]["x"] = 80;
    const Reply invalid = service.submit(outside.dump());
    CHECK(invalid.status == 400);
    CHECK(json::parse(invalid.body)["violations"].size() >= 1);

    // 3 x 90 agents is over the cap of 150
    const Reply big = service.submit(fixture_doc("s1.json").dump());
    CHECK(big.status == 413);

    json five = fixture_doc("s3.json");
    five["configurations"].erase(1);
    five["configurations"].erase(1);
    for (const char* id : {"B", "C", "D", "E"}) {
        json c = five["configurations"][0];
        c["id"] = id;
        c["spawn_areas"][0]["agent_count"] = 1;
        five["configurations"].push_back(c);
    }
    five["configurations"][0]["spawn_areas"][0]["agent_count"] = 1;
    CHECK(service.submit(five.dump()).status == 400);
}

TEST_CASE("unknown ids and results that are not ready") {
    ServiceConfig cfg = small_config();
    cfg.workers = 1;
    Service service(cfg);
    CHECK(service.status("0123456789abcdef0123456789abcdef").status == 404);
    CHECK(service.results("nope").status == 404);
    CHECK(service.occupancy("nope", "A").status == 404);
    CHECK_FALSE(service.wait("nope", 10ms));

    const std::string slow = submit_ok(service, request("s1.json", 3));
    const std::string queued = submit_ok(service, request("s3.json", 1));
    const Reply early = service.results(queued);
    CHECK(early.status == 409);
    CHECK(json::parse(early.body)["state"] == "queued");
    CHECK(service.trajectories(queued, "A").status == 409);
    REQUIRE(service.wait(queued, 120s));
    CHECK(service.status(slow).body.find("\"done\"") != std::string::npos);
    CHECK(service.occupancy(queued, "Z").status == 404);
}

TEST_CASE("failed jobs report incomplete runs") {
    Service service(small_config());
    json body = request("s1.json", 1);
    body["params"]["overrides"] = {{"max_sim_time", 3}};
    const std::string id = submit_ok(service, body);
    REQUIRE(service.wait(id, 60s));
    const json status = json::parse(service.status(id).body);
    CHECK(status["state"] == "failed");
    CHECK(status["error"] == "simulation incomplete");
    CHECK(status["details"].size() == 3);
    CHECK(service.results(id).status == 409);
}

TEST_CASE("artifacts over HTTP") {
    LiveService live(small_config());
    httplib::Client client = live.client();
    const auto posted = client.Post("/api/scenarios/run", request("s3.json", 1).dump(), "application/json");
    REQUIRE(posted);
    CHECK(posted->status == 202);
    CHECK(posted->get_header_value("Access-Control-Allow-Origin") == "*");
    const std::string id = json::parse(posted->body).at("job_id");
    REQUIRE(live.service.wait(id, 60s));

    const auto status = client.Get("/api/jobs/" + id);
    REQUIRE(status);
    CHECK(json::parse(status->body)["state"] == "done");

    const auto results = client.Get("/api/jobs/" + id + "/results");
    REQUIRE(results);
    CHECK(results->status == 200);
    CHECK(json::parse(results->body)["scenario"] == "S3");

    const auto pgm = client.Get("/api/jobs/" + id + "/configs/B/occupancy");
    REQUIRE(pgm);
    CHECK(pgm->status == 200);
    CHECK(pgm->get_header_value("Content-Type") == "image/x-portable-graymap");
    CHECK(pgm->body.rfind("P5\n30 30\n255\n", 0) == 0);
    CHECK(pgm->body.size() == std::string("P5\n30 30\n255\n").size() + 900);

    const auto csv = client.Get("/api/jobs/" + id + "/configs/C/trajectories");
    REQUIRE(csv);
    CHECK(csv->get_header_value("Content-Type") == "text/csv");
    CHECK(csv->body.rfind("agent_id,point,x,y\n", 0) == 0);

    CHECK(client.Get("/api/jobs/" + id + "/configs/Q/occupancy")->status == 404);
    CHECK(client.Get("/api/jobs/ffff")->status == 404);
    const auto missing = client.Get("/api/nothing");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body).contains("error"));

    const auto bad = client.Post("/api/scenarios/run", "{", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(bad->get_header_value("Access-Control-Allow-Origin") == "*");

    const auto preflight = client.Options("/api/scenarios/run");
    REQUIRE(preflight);
    CHECK(preflight->status == 204);
    CHECK(preflight->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("results directory survives a restart") {
    const auto dir = scratch_dir("service_store");
    ServiceConfig cfg = small_config();
    cfg.results_dir = dir;
    std::string id, manifest, pgm;
    {
        Service first(cfg);
        id = submit_ok(first, request("s3.json", 1));
        REQUIRE(first.wait(id, 60s));
        manifest = first.results(id).body;
        pgm = first.occupancy(id, "A").body;
    }
    CHECK(std::filesystem::exists(dir / id / "manifest.json"));
    Service second(cfg);
    CHECK(json::parse(second.status(id).body)["state"] == "done");
    CHECK(second.results(id).body == manifest);
    CHECK(second.occupancy(id, "A").body == pgm);
    CHECK(second.results("../../etc").status == 404);
}

TEST_CASE("environment overrides") {
    setenv("PORT", "9123", 1);
    setenv("MAX_AGENTS", "77", 1);
    setenv("RESULTS_DIR", "/tmp/somewhere", 1);
    const ServiceConfig c = service_config_from_env();
    CHECK(c.port == 9123);
    CHECK(c.max_agents == 77);
    CHECK(c.results_dir == std::filesystem::path("/tmp/somewhere"));
    setenv("PORT", "eighty", 1);
    CHECK_THROWS(service_config_from_env());
    unsetenv("PORT");
    unsetenv("MAX_AGENTS");
    unsetenv("RESULTS_DIR");
}
