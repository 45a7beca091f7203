#include "ovdprobe/http.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include <httplib.h>

namespace ovdprobe {

ServiceEndpoint parse_service_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("service URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ServiceEndpoint ep;
  ep.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    ep.path_prefix = url.substr(path_start);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
  }
  if (ep.origin.size() <= scheme_end + 3) throw std::invalid_argument("service URL has no host: " + url);
  return ep;
}

std::string to_string(CallStatus status) {
  switch (status) {
    case CallStatus::kOk: return "ok";
    case CallStatus::kFailedPermanent: return "failed_permanent";
    case CallStatus::kFailedTransient: return "failed_transient";
  }
  return "unknown";
}

CallResult post_json(const ServiceEndpoint& endpoint, const std::string& path, const std::string& body,
                     const RetryPolicy& policy) {
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(policy.timeout);
  client.set_read_timeout(policy.timeout);
  client.set_write_timeout(policy.timeout);

  CallResult result;
  auto backoff = policy.initial_backoff;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    result.attempts = attempt + 1;
    auto res = client.Post(endpoint.path_prefix + path, body, "application/json");
    if (!res) {
      result.status = CallStatus::kFailedTransient;
      result.error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    result.http_status = res->status;
    result.body = res->body;
    if (res->status >= 200 && res->status < 300) {
      result.status = CallStatus::kOk;
      result.error.clear();
      return result;
    }
    if (res->status >= 400 && res->status < 500) {
      result.status = CallStatus::kFailedPermanent;
      result.error = "HTTP " + std::to_string(res->status);
      return result;
    }
    result.status = CallStatus::kFailedTransient;
    result.error = "HTTP " + std::to_string(res->status);
  }
  return result;
}

void parallel_for(std::size_t n, std::size_t concurrency, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::max<std::size_t>(1, std::min(concurrency, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = n;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ovdprobe
