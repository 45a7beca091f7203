#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <string>

namespace ovdprobe {

/// "http://host:port/prefix" split into what the HTTP client needs.
struct ServiceEndpoint {
  std::string origin;       // scheme://host:port
  std::string path_prefix;  // "" or "/prefix" without trailing slash
};

ServiceEndpoint parse_service_url(const std::string& url);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{120};
};

enum class CallStatus { kOk, kFailedPermanent, kFailedTransient };
std::string to_string(CallStatus status);

struct CallResult {
  CallStatus status = CallStatus::kFailedTransient;
  int http_status = 0;
  int attempts = 0;
  std::string body;
  std::string error;
};

/// POSTs a JSON body. Transport errors and 5xx are retried with exponential backoff
/// (initial_backoff, doubled per retry); 4xx fails immediately.
CallResult post_json(const ServiceEndpoint& endpoint, const std::string& path, const std::string& body,
                     const RetryPolicy& policy);

/// Runs fn(i) for i in [0, n) on up to `concurrency` threads. Exceptions from fn propagate
/// after all workers stop.
void parallel_for(std::size_t n, std::size_t concurrency, const std::function<void(std::size_t)>& fn);

}  // namespace ovdprobe
