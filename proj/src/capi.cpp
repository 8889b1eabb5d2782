#include "pilotwave.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <ostream>
#include <sstream>
#include <streambuf>
#include <string>

#include "pilotwave/config.hpp"
#include "pilotwave/scenario.hpp"

namespace {

thread_local std::string g_last_error;

pw_status fail(pw_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Captures the run log and forwards each completed line to the callback.
class LineBuf final : public std::streambuf {
 public:
  LineBuf(pw_log_fn fn, void* user, std::string& capture)
      : fn_(fn), user_(user), capture_(capture) {}
  ~LineBuf() override { emit(); }

 protected:
  int overflow(int ch) override {
    if (ch == traits_type::eof()) return 0;
    const char c = static_cast<char>(ch);
    capture_.push_back(c);
    if (c == '\n')
      emit();
    else
      line_.push_back(c);
    return ch;
  }

 private:
  void emit() {
    if (fn_ && !line_.empty()) fn_(line_.c_str(), user_);
    line_.clear();
  }
  pw_log_fn fn_;
  void* user_;
  std::string& capture_;
  std::string line_;
};

std::string last_log_line(const std::string& log) {
  auto end = log.find_last_not_of('\n');
  if (end == std::string::npos) return {};
  auto begin = log.find_last_of('\n', end);
  begin = (begin == std::string::npos) ? 0 : begin + 1;
  return log.substr(begin, end - begin + 1);
}

char* heap_copy(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

}  // namespace

struct pw_request {
  pw::scenario::RunRequest req;
  pw_log_fn fn = nullptr;
  void* user = nullptr;
  std::string log;
};

extern "C" {

const char* pw_version(void) { return "1.0.0"; }

const char* pw_status_name(int status) {
  switch (status) {
    case PW_OK: return "ok";
    case PW_CONFIG_ERROR: return "config-error";
    case PW_NUMERIC_ERROR: return "numeric-error";
    case PW_CERTIFICATION_ERROR: return "certification-error";
    case PW_USAGE_ERROR: return "usage-error";
    default: return "unknown";
  }
}

const char* pw_last_error(void) { return g_last_error.c_str(); }

int pw_subcommand_count(void) {
  static const int count =
      static_cast<int>(pw::scenario::subcommands().size());
  return count;
}

const char* pw_subcommand_name(int index) {
  static const std::vector<std::string> names = pw::scenario::subcommands();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[static_cast<std::size_t>(index)].c_str();
}

int pw_is_subcommand(const char* name) {
  return name != nullptr && pw::scenario::is_subcommand(name) ? 1 : 0;
}

char* pw_default_config_text(const char* subcommand) {
  if (subcommand == nullptr) {
    fail(PW_USAGE_ERROR, "null subcommand");
    return nullptr;
  }
  try {
    auto cfg = pw::scenario::default_config(subcommand);
    std::ostringstream out;
    for (const auto& [section, keys] : cfg.entries()) {
      out << "[" << section << "]\n";
      for (const auto& [key, value] : keys)
        out << key << " = " << value << "\n";
    }
    return heap_copy(out.str());
  } catch (const std::exception& e) {
    fail(PW_CONFIG_ERROR, e.what());
    return nullptr;
  }
}

void pw_text_free(char* text) { std::free(text); }

pw_request* pw_request_new(const char* subcommand, const char* out_dir) {
  if (subcommand == nullptr || out_dir == nullptr) {
    fail(PW_USAGE_ERROR, "null subcommand or output directory");
    return nullptr;
  }
  auto* r = new (std::nothrow) pw_request;
  if (r == nullptr) {
    fail(PW_USAGE_ERROR, "out of memory");
    return nullptr;
  }
  r->req.subcommand = subcommand;
  r->req.out_dir = out_dir;
  return r;
}

void pw_request_free(pw_request* req) { delete req; }

pw_status pw_request_set_config_file(pw_request* req, const char* path) {
  if (req == nullptr || path == nullptr)
    return fail(PW_USAGE_ERROR, "null request or path");
  req->req.config_path = path;
  return PW_OK;
}

pw_status pw_request_set_seed(pw_request* req, uint64_t seed) {
  if (req == nullptr) return fail(PW_USAGE_ERROR, "null request");
  req->req.seed = seed;
  return PW_OK;
}

pw_status pw_request_set_threads(pw_request* req, int threads) {
  if (req == nullptr) return fail(PW_USAGE_ERROR, "null request");
  if (threads < 1) return fail(PW_USAGE_ERROR, "threads must be positive");
  req->req.threads = threads;
  return PW_OK;
}

pw_status pw_request_set_verbose(pw_request* req, int verbose) {
  if (req == nullptr) return fail(PW_USAGE_ERROR, "null request");
  req->req.verbose = verbose != 0;
  return PW_OK;
}

pw_status pw_request_add_override(pw_request* req, const char* assignment) {
  if (req == nullptr || assignment == nullptr)
    return fail(PW_USAGE_ERROR, "null request or assignment");
  req->req.overrides.emplace_back(assignment);
  return PW_OK;
}

pw_status pw_request_set_logger(pw_request* req, pw_log_fn fn, void* user) {
  if (req == nullptr) return fail(PW_USAGE_ERROR, "null request");
  req->fn = fn;
  req->user = user;
  return PW_OK;
}

pw_status pw_request_run(pw_request* req) {
  if (req == nullptr) return fail(PW_USAGE_ERROR, "null request");
  req->log.clear();
  int status = PW_NUMERIC_ERROR;
  {
    LineBuf buf(req->fn, req->user, req->log);
    std::ostream out(&buf);
    try {
      status = pw::scenario::run(req->req, out);
    } catch (const std::exception& e) {
      // run() maps its own failures; anything escaping is a numeric defect.
      out << "numeric failure: " << e.what() << "\n";
      status = PW_NUMERIC_ERROR;
    }
  }
  if (status != PW_OK) g_last_error = last_log_line(req->log);
  return static_cast<pw_status>(status);
}

const char* pw_request_log(const pw_request* req) {
  return req == nullptr ? "" : req->log.c_str();
}

}  // extern "C"
