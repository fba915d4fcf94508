#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mlat/dataset.hpp"
#include "mlat/error.hpp"
#include "mlat/gbdt.hpp"

namespace httplib {
class Server;
}

namespace mlat::service {

/// A request that failed validation. `details` is a list of {field, error}.
class RequestError : public ValidationError {
public:
    RequestError(const std::string& what, nlohmann::json details)
        : ValidationError(what), details_(std::move(details)) {}
    const nlohmann::json& details() const { return details_; }

private:
    nlohmann::json details_;
};

/// Short names accepted on input and rewritten to the canonical ones.
inline constexpr std::pair<std::string_view, std::string_view> kAliases[] = {
    {"duration_weeks", "est_duration_weeks"},
    {"integ_complexity", "integration_complexity"},
    {"pain_score", "pain_severity_score"}};

/// Strict parse of a predict request: unknown fields, missing fields, wrong
/// types, out-of-range values and conflicting aliases all become RequestError
/// with one detail entry per problem.
dataset::RawFeatures canonicalize(const nlohmann::json& request);

/// Canonical names only.
nlohmann::json echo(const dataset::RawFeatures& f);

struct Response {
    int status = 200;
    nlohmann::json body;
};

/// Stateless predictor around one immutable model.
class PricingService {
public:
    /// Throws gbdt::ModelConsistencyError unless the model uses the canonical
    /// eight encoded features in order.
    explicit PricingService(gbdt::GbdtModel model);
    static PricingService from_artifact(const std::filesystem::path& path);

    /// Body text in, status + JSON out. Never throws.
    Response handle_predict(std::string_view body) const;
    Response handle_predict(const nlohmann::json& request) const;

    /// Just the number, no envelope. Throws RequestError.
    double predict(const nlohmann::json& request) const;

    nlohmann::json health() const;
    const std::string& model_version() const { return version_; }
    const gbdt::GbdtModel& model() const { return model_; }

private:
    gbdt::GbdtModel model_;
    std::string version_;
    nlohmann::json importances_;
    std::chrono::steady_clock::time_point started_;
};

nlohmann::json error_body(std::string_view error, nlohmann::json details = nlohmann::json::array());

/// HTTP front end: POST /predict and GET /health. The socket is bound in the
/// constructor, so a busy port fails there.
class HttpServer {
public:
    HttpServer(std::shared_ptr<const PricingService> service, const std::string& host, int port);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    int port() const { return port_; }
    /// Blocks until stop() is called from another thread. Returns at once if
    /// stop() came first.
    void run();
    /// Safe before, during or after run(); closes the listening socket.
    void stop();

private:
    std::shared_ptr<const PricingService> service_;
    std::unique_ptr<httplib::Server> server_;
    int port_ = 0;
    std::mutex mu_;
    bool running_ = false;
    bool stopped_ = false;
};

/// "host:port" (host may be empty for 0.0.0.0). Throws ValidationError.
std::pair<std::string, int> parse_bind(const std::string& bind);

} // namespace mlat::service
