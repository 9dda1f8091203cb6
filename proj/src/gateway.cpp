#include <algorithm>
#include <cmath>
#include <thread>

#include "slidetutor/error.hpp"
#include "slidetutor/gateway.hpp"

namespace slidetutor {

std::string to_string(Profile profile) { return profile == Profile::Planner ? "planner" : "tutor"; }

Profile profile_from_string(const std::string& name) {
  if (name == "planner") return Profile::Planner;
  if (name == "tutor") return Profile::Tutor;
  throw Error(Errc::InvalidRequest, "unknown profile '" + name + "'");
}

std::string to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

json to_json(const SamplingParams& p) {
  json out = json::object();
  if (p.frequency_penalty) out["frequency_penalty"] = *p.frequency_penalty;
  if (p.logit_bias) out["logit_bias"] = *p.logit_bias;
  if (p.logprobs) out["logprobs"] = *p.logprobs;
  if (p.max_tokens) out["max_tokens"] = *p.max_tokens;
  if (p.n) out["n"] = *p.n;
  if (p.presence_penalty) out["presence_penalty"] = *p.presence_penalty;
  if (p.stop) out["stop"] = *p.stop;
  if (p.temperature) out["temperature"] = *p.temperature;
  if (p.top_p) out["top_p"] = *p.top_p;
  if (p.do_sample) out["do_sample"] = *p.do_sample;
  return out;
}

SamplingParams profile_defaults(Profile profile) {
  SamplingParams p;
  if (profile == Profile::Planner) {
    p.frequency_penalty = 0.0;
    p.logit_bias = nullptr;
    p.logprobs = false;
    p.max_tokens = 4096;
    p.n = 1;
    p.presence_penalty = 0.0;
    p.stop = nullptr;
    p.temperature = 1.0;
    p.top_p = 1.0;
  } else {
    p.do_sample = true;
    p.temperature = 0.95;
    p.top_p = 0.7;
    p.max_tokens = 1024;
  }
  return p;
}

ModelRequest ModelRequest::make(Profile profile, std::string purpose, std::string system_prompt) {
  ModelRequest r;
  r.profile = profile;
  r.params = profile_defaults(profile);
  r.purpose = std::move(purpose);
  r.messages.push_back(Message{Role::System, std::move(system_prompt), {}, "system"});
  return r;
}

ModelRequest& ModelRequest::add(Role role, std::string text, std::string tag) {
  messages.push_back(Message{role, std::move(text), {}, std::move(tag)});
  return *this;
}

std::size_t ModelRequest::count_tagged(std::string_view tag) const {
  return static_cast<std::size_t>(
      std::count_if(messages.begin(), messages.end(), [&](const Message& m) { return m.tag == tag; }));
}

std::string ModelRequest::all_text() const {
  std::string out;
  for (const auto& m : messages) {
    out += m.text;
    out += '\n';
  }
  return out;
}

void validate(const ModelRequest& request) {
  if (request.messages.empty() || request.messages.front().role != Role::System) {
    throw Error(Errc::InvalidRequest, "the first message must be the system message");
  }
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    const auto& m = request.messages[i];
    if (i > 0 && m.role == Role::System) throw Error(Errc::InvalidRequest, "more than one system message");
    if (!m.images.empty() && m.role != Role::User) {
      throw Error(Errc::InvalidRequest, "images are only allowed on user messages");
    }
    for (const auto& img : m.images) {
      if (img.data.size() > kMaxImageBytes) {
        throw Error(Errc::InvalidRequest, "image exceeds " + std::to_string(kMaxImageBytes) + " bytes");
      }
      if (img.data.empty() && img.url.empty()) throw Error(Errc::InvalidRequest, "empty image part");
    }
  }
}

json request_summary(const ModelRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json images = json::array();
    for (const auto& img : m.images) {
      images.push_back(img.url.empty() ? json{{"mime", img.mime}, {"sha256", digest::sha256_hex(img.data)}}
                                       : json{{"url", img.url}});
    }
    messages.push_back({{"role", to_string(m.role)}, {"text", m.text}, {"images", images}, {"tag", m.tag}});
  }
  return {{"profile", to_string(request.profile)},
          {"purpose", request.purpose},
          {"params", to_json(request.params)},
          {"messages", std::move(messages)}};
}

std::string request_hash(const ModelRequest& request) { return digest::sha256_hex(request_summary(request).dump()); }

json to_json(const CallRecord& r) {
  json out = {{"timestamp", r.timestamp_ms},
              {"profile", to_string(r.profile)},
              {"purpose", r.purpose},
              {"correlation", r.correlation},
              {"request_hash", r.request_hash},
              {"status", r.status},
              {"attempts", r.attempts},
              {"finish_reason", r.finish_reason},
              {"usage", {{"prompt_tokens", r.usage.prompt_tokens}, {"completion_tokens", r.usage.completion_tokens}}}};
  if (!r.request.is_null()) out["request"] = r.request;
  if (!r.response.empty()) out["response"] = r.response;
  return out;
}

CallLog::CallLog(std::optional<std::filesystem::path> file, bool keep_bodies)
    : file_(std::move(file)), keep_bodies_(keep_bodies) {}

void CallLog::append(CallRecord record) {
  std::lock_guard lock(mu_);
  if (!keep_bodies_) {
    record.request = nullptr;
    record.response.clear();
  }
  if (file_) fsutil::append_line(*file_, to_json(record).dump());
  records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<CallRecord> CallLog::records_for(const std::string& correlation) const {
  std::lock_guard lock(mu_);
  std::vector<CallRecord> out;
  std::copy_if(records_.begin(), records_.end(), std::back_inserter(out),
               [&](const CallRecord& r) { return r.correlation == correlation; });
  return out;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

Gateway::Gateway(std::shared_ptr<Backend> backend, RetryPolicy policy, std::shared_ptr<CallLog> log,
                 int max_in_flight)
    : backend_(std::move(backend)),
      policy_(policy),
      log_(std::move(log)),
      in_flight_(std::clamp(max_in_flight, 1, 1024)) {
  if (!backend_) throw Error(Errc::InvalidRequest, "gateway needs a backend");
  if (policy_.max_attempts < 1) policy_.max_attempts = 1;
}

namespace {

bool transient(Errc code) { return code == Errc::Timeout || code == Errc::TransientBackend; }

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct SemaphoreGuard {
  std::counting_semaphore<1024>& sem;
  explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
  ~SemaphoreGuard() { sem.release(); }
};

}  // namespace

ModelCompletion Gateway::complete(const ModelRequest& request) {
  validate(request);

  CallRecord record;
  record.profile = request.profile;
  record.purpose = request.purpose;
  record.correlation = request.correlation;
  record.request_hash = request_hash(request);
  if (log_->keeps_bodies()) record.request = request_summary(request);

  std::string last_error;
  for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
    record.attempts = attempt;
    try {
      ModelCompletion completion;
      {
        SemaphoreGuard guard(in_flight_);
        completion = backend_->send(request, policy_.timeout);
      }
      record.timestamp_ms = now_ms();
      record.status = "ok";
      record.usage = completion.usage;
      record.finish_reason = completion.finish_reason;
      record.response = completion.text;
      log_->append(record);
      return completion;
    } catch (const Error& e) {
      last_error = e.what();
      if (!transient(e.code())) {
        record.timestamp_ms = now_ms();
        record.status = std::string(errc_name(e.code()));
        log_->append(record);
        throw;
      }
    }
    if (attempt < policy_.max_attempts) {
      auto delay = std::chrono::duration<double, std::milli>(policy_.base_delay.count() *
                                                             std::pow(policy_.multiplier, attempt - 1));
      std::this_thread::sleep_for(delay);
    }
  }
  record.timestamp_ms = now_ms();
  record.status = std::string(errc_name(Errc::RetriesExhausted));
  log_->append(record);
  throw Error(Errc::RetriesExhausted,
              "gave up after " + std::to_string(policy_.max_attempts) + " attempts: " + last_error);
}

}  // namespace slidetutor
