#include "mlat/service.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <thread>

#include <httplib.h>

namespace mlat::service {

using nlohmann::json;

namespace {

std::string_view canonical_name(std::string_view key) {
    for (const auto& [alias, name] : kAliases)
        if (key == alias) return name;
    return key;
}

bool is_raw_feature(std::string_view key) {
    for (auto n : dataset::kRawFeatureNames)
        if (n == key) return true;
    return false;
}

struct Collector {
    json details = json::array();
    void add(std::string_view field, std::string error) { details.push_back({{"field", field}, {"error", error}}); }
};

std::optional<int> int_field(const json& v, std::string_view name, int lo, int hi, Collector& c) {
    if (!v.is_number()) {
        c.add(name, std::string("expected an integer, got ") + v.type_name());
        return std::nullopt;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d) || d != std::floor(d)) {
        c.add(name, "expected an integer, got " + v.dump());
        return std::nullopt;
    }
    if (d < lo || d > hi) {
        c.add(name, v.dump() + " outside [" + std::to_string(lo) + ", " +
                        (hi == std::numeric_limits<int>::max() ? std::string("inf") : std::to_string(hi)) + "]");
        return std::nullopt;
    }
    return static_cast<int>(d);
}

Response respond(int status, json body) { return {status, std::move(body)}; }

} // namespace

dataset::RawFeatures canonicalize(const json& request) {
    if (!request.is_object()) throw RequestError("request must be a JSON object", json::array());
    Collector c;
    json canon = json::object();
    for (const auto& [key, value] : request.items()) {
        const auto name = std::string(canonical_name(key));
        if (!is_raw_feature(name)) {
            c.add(key, "unknown field");
            continue;
        }
        if (canon.contains(name)) {
            if (canon[name] != value)
                c.add(name, "conflicting aliases: " + canon[name].dump() + " vs " + value.dump());
            continue;
        }
        canon[name] = value;
    }
    for (auto n : dataset::kRawFeatureNames)
        if (!canon.contains(n)) c.add(n, "missing required field");

    dataset::RawFeatures f;
    if (canon.contains("client_revenue")) {
        const auto& v = canon["client_revenue"];
        if (!v.is_number())
            c.add("client_revenue", std::string("expected a number, got ") + v.type_name());
        else if (!(v.get<double>() > 0.0) || !std::isfinite(v.get<double>()))
            c.add("client_revenue", "must be a positive finite number");
        else
            f.client_revenue = v.get<double>();
    }
    constexpr int kMax = std::numeric_limits<int>::max();
    if (canon.contains("est_duration_weeks"))
        if (auto v = int_field(canon["est_duration_weeks"], "est_duration_weeks", 1, kMax, c)) f.est_duration_weeks = *v;
    if (canon.contains("pain_severity_score"))
        if (auto v = int_field(canon["pain_severity_score"], "pain_severity_score", 1, 5, c)) f.pain_severity_score = *v;
    if (canon.contains("integration_complexity"))
        if (auto v = int_field(canon["integration_complexity"], "integration_complexity", 1, 5, c))
            f.integration_complexity = *v;
    if (canon.contains("phase"))
        if (auto v = int_field(canon["phase"], "phase", 1, 4, c)) f.phase = *v;
    if (canon.contains("tech_stack")) {
        const auto& v = canon["tech_stack"];
        if (!v.is_string()) {
            c.add("tech_stack", std::string("expected a string, got ") + v.type_name());
        } else {
            try {
                f.tech_stack = dataset::parse_tech_stack(v.get<std::string>());
            } catch (const ValidationError& e) {
                c.add("tech_stack", e.what());
            }
        }
    }
    if (!c.details.empty()) throw RequestError("request validation failed", std::move(c.details));
    dataset::validate(f);
    return f;
}

json echo(const dataset::RawFeatures& f) {
    return {{"client_revenue", f.client_revenue},
            {"est_duration_weeks", f.est_duration_weeks},
            {"pain_severity_score", f.pain_severity_score},
            {"integration_complexity", f.integration_complexity},
            {"phase", f.phase},
            {"tech_stack", dataset::to_string(f.tech_stack)}};
}

json error_body(std::string_view error, json details) { return {{"error", error}, {"details", std::move(details)}}; }

PricingService::PricingService(gbdt::GbdtModel model)
    : model_(std::move(model)), started_(std::chrono::steady_clock::now()) {
    bool canonical = model_.feature_names.size() == dataset::kNumFeatures;
    for (std::size_t i = 0; canonical && i < dataset::kNumFeatures; ++i)
        canonical = model_.feature_names[i] == dataset::kFeatureNames[i];
    if (!canonical)
        throw gbdt::ModelConsistencyError("model features do not match the canonical eight-column encoding");
    version_ = gbdt::model_version(model_);
    importances_ = json::object();
    for (const auto& fi : gbdt::feature_importance(model_)) importances_[fi.name] = fi.share;
}

PricingService PricingService::from_artifact(const std::filesystem::path& path) {
    return PricingService(gbdt::load_model(path));
}

double PricingService::predict(const json& request) const {
    const auto x = dataset::encode_features(canonicalize(request));
    return model_.predict(x.values);
}

Response PricingService::handle_predict(std::string_view body) const {
    json request;
    try {
        request = json::parse(body);
    } catch (const json::parse_error& e) {
        return respond(400, error_body("malformed JSON", json::array({e.what()})));
    }
    return handle_predict(request);
}

Response PricingService::handle_predict(const json& request) const {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto f = canonicalize(request);
        const auto x = dataset::encode_features(f);
        const double price = model_.predict(x.values);
        if (!std::isfinite(price)) return respond(500, error_body("non-finite prediction"));
        json body = {{"predicted_price", price},
                     {"currency", "USD"},
                     {"model_version", version_},
                     {"feature_importances", importances_},
                     {"echo", echo(f)}};
        const auto t1 = std::chrono::steady_clock::now();
        body["latency_micros"] = std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
        return respond(200, std::move(body));
    } catch (const RequestError& e) {
        return respond(422, error_body(e.what(), e.details()));
    } catch (const ValidationError& e) {
        return respond(422, error_body("request validation failed", json::array({e.what()})));
    } catch (const std::exception& e) {
        return respond(500, error_body("internal error", json::array({e.what()})));
    }
}

json PricingService::health() const {
    const std::chrono::duration<double> up = std::chrono::steady_clock::now() - started_;
    return {{"ok", true}, {"model_version", version_}, {"n_train", model_.n_train}, {"uptime", up.count()}};
}

HttpServer::HttpServer(std::shared_ptr<const PricingService> service, const std::string& host, int port)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
    auto svc = service_;
    server_->Post("/predict", [svc](const httplib::Request& req, httplib::Response& res) {
        const auto r = svc->handle_predict(std::string_view(req.body));
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    });
    server_->Get("/health", [svc](const httplib::Request&, httplib::Response& res) {
        res.set_content(svc->health().dump(), "application/json");
    });
    server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) res.set_content(error_body(httplib::status_message(res.status)).dump(), "application/json");
    });
    // No SO_REUSEPORT: a second server on a busy port must fail, not share it.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        if (port_ < 0) throw Error("cannot bind " + host + " on any port");
    } else {
        if (!server_->bind_to_port(host, port))
            throw Error("cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
        port_ = port;
    }
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::run() {
    {
        std::lock_guard lock(mu_);
        if (stopped_) return;
        running_ = true;
    }
    server_->listen_after_bind();
}

void HttpServer::stop() {
    bool was_running = false;
    {
        std::lock_guard lock(mu_);
        if (stopped_) return;
        stopped_ = true;
        was_running = running_;
    }
    if (was_running) {
        server_->wait_until_ready();
        server_->stop();
        return;
    }
    // Never served: the bound socket is only released through a listen/stop cycle.
    std::thread t([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    server_->stop();
    t.join();
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw ValidationError("bind address must be host:port, got '" + bind + "'");
    std::string host = bind.substr(0, colon);
    if (host.empty()) host = "0.0.0.0";
    int port = -1;
    try {
        std::size_t used = 0;
        port = std::stoi(bind.substr(colon + 1), &used);
        if (used != bind.size() - colon - 1) port = -1;
    } catch (const std::exception&) {
        port = -1;
    }
    if (port < 0 || port > 65535) throw ValidationError("invalid port in bind address '" + bind + "'");
    return {host, port};
}

} // namespace mlat::service
