#include "menulens/service.hpp"

#include <sodium.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <regex>
#include <thread>

#include <httplib.h>

#include "json_util.hpp"
#include "menulens/error.hpp"
#include "menulens/unicode.hpp"

namespace menulens {

void FifoMutex::lock() {
  std::unique_lock lock(mutex_);
  const std::uint64_t ticket = next_ticket_++;
  cv_.wait(lock, [&] { return now_serving_ == ticket; });
}

void FifoMutex::unlock() {
  {
    std::lock_guard lock(mutex_);
    ++now_serving_;
  }
  cv_.notify_all();
}

std::shared_ptr<const DigitalMenu> SessionSlot::menu_snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void SessionSlot::set_menu_snapshot(std::shared_ptr<const DigitalMenu> menu) {
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(menu);
}

// --- SessionStore -----------------------------------------------------------

std::string SessionStore::generate_id() {
  static const bool ready = sodium_init() >= 0;
  if (!ready) throw std::runtime_error("libsodium initialisation failed");
  unsigned char bytes[16];
  randombytes_buf(bytes, sizeof bytes);
  constexpr int variant = sodium_base64_VARIANT_URLSAFE_NO_PADDING;
  std::string out(sodium_base64_ENCODED_LEN(sizeof bytes, variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes, sizeof bytes, variant);
  out.resize(std::char_traits<char>::length(out.c_str()));
  return out;
}

std::shared_ptr<SessionSlot> SessionStore::create(ChatSession session) {
  auto slot = std::make_shared<SessionSlot>();
  slot->session = std::move(session);
  slot->created = slot->last_used = std::chrono::steady_clock::now();

  std::lock_guard lock(mutex_);
  if (sessions_.size() >= capacity_) {
    auto victim = sessions_.end();
    for (auto it = sessions_.begin(); it != sessions_.end(); ++it) {
      if (it->second->in_flight > 0) continue;
      if (victim == sessions_.end() || it->second->last_used < victim->second->last_used) {
        victim = it;
      }
    }
    if (victim == sessions_.end()) return nullptr;
    sessions_.erase(victim);
  }
  std::string id;
  do {
    id = generate_id();
  } while (sessions_.contains(id));
  slot->session.id = id;
  sessions_.emplace(id, slot);
  return slot;
}

SessionStore::Handle SessionStore::acquire(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return {};
  ++it->second->in_flight;
  it->second->last_used = std::chrono::steady_clock::now();
  return Handle(this, it->second);
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

SessionStore::Handle::Handle(SessionStore* store, std::shared_ptr<SessionSlot> slot)
    : store_(store), slot_(std::move(slot)) {}

SessionStore::Handle::Handle(Handle&& other) noexcept
    : store_(std::exchange(other.store_, nullptr)), slot_(std::move(other.slot_)) {}

SessionStore::Handle& SessionStore::Handle::operator=(Handle&& other) noexcept {
  if (this != &other) {
    release();
    store_ = std::exchange(other.store_, nullptr);
    slot_ = std::move(other.slot_);
  }
  return *this;
}

SessionStore::Handle::~Handle() { release(); }

void SessionStore::Handle::release() {
  if (store_ == nullptr || !slot_) return;
  std::lock_guard lock(store_->mutex_);
  --slot_->in_flight;
  slot_->last_used = std::chrono::steady_clock::now();
  store_ = nullptr;
  slot_.reset();
}

// --- HTTP -------------------------------------------------------------------

namespace {

using nlohmann::json;

// Error raised by handlers with a fixed status and code.
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidGeometry:
    case ErrorCode::kParseError:
    case ErrorCode::kSchemaError:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kNoMenuDetected:
    case ErrorCode::kEmptyMenu:
    case ErrorCode::kNoEligibleItems:
      return 422;
    case ErrorCode::kEngineError:
    case ErrorCode::kLlmRejected:
      return 502;
    case ErrorCode::kLlmUnavailable:
      return 503;
    case ErrorCode::kEngineTimeout:
      return 504;
    default:
      return 500;
  }
}

void write_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void write_error(httplib::Response& res, int status, std::string_view code,
                 std::string_view message) {
  nlohmann::ordered_json body;
  body["code"] = code;
  body["message"] = message;
  write_json(res, status, body);
}

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty() || req.body.find_first_not_of(" \t\r\n") == std::string::npos) {
    if (allow_empty) return json::object();
    throw HttpError{400, "BAD_REQUEST", "request body must be a JSON object"};
  }
  json body = detail::parse_json(req.body);
  if (!body.is_object()) throw HttpError{400, "BAD_REQUEST", "request body must be a JSON object"};
  return body;
}

std::vector<unsigned char> decode_base64(const std::string& text) {
  static const bool ready = sodium_init() >= 0;
  if (!ready) throw std::runtime_error("libsodium initialisation failed");
  std::vector<unsigned char> out(text.size());
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \r\n", &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw Error::schema("image", "not valid base64");
  }
  out.resize(len);
  return out;
}

// Temporary file removed on scope exit.
class TempFile {
 public:
  explicit TempFile(std::span<const unsigned char> bytes) {
    path_ = std::filesystem::temp_directory_path() /
            ("menulens-" + SessionStore::generate_id() + ".img");
    std::ofstream out(path_, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path_.string());
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

const std::regex kProfileName("[A-Za-z0-9_-]{1,64}");

}  // namespace

struct MenuService::Impl {
  httplib::Server server;
  std::thread thread;
};

MenuService::MenuService(ServiceOptions options)
    : options_(std::move(options)), store_(options_.capacity), impl_(std::make_unique<Impl>()) {
  if (options_.capacity == 0) throw Error(ErrorCode::kInvalidArgument, "capacity must be positive");
  register_routes(impl_->server);
}

MenuService::~MenuService() { stop(); }

void MenuService::register_routes(httplib::Server& server) {
  // Every handler goes through here so failures always produce {code, message}.
  auto guarded = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const HttpError& e) {
        write_error(res, e.status, e.code, e.message);
      } catch (const Error& e) {
        write_error(res, status_for(e.code()), e.code_name(), e.what());
      } catch (const json::exception& e) {
        write_error(res, 400, "SCHEMA_ERROR", e.what());
      } catch (const std::exception& e) {
        write_error(res, 500, "INTERNAL", e.what());
      }
    };
  };

  auto session_handle = [this](const httplib::Request& req) {
    const std::string id = req.matches[1];
    auto handle = store_.acquire(id);
    if (!handle) throw HttpError{404, "SESSION_NOT_FOUND", "no session " + id};
    return handle;
  };

  auto make_client = [this]() -> std::unique_ptr<ChatClient> {
    return options_.llm_factory ? options_.llm_factory() : nullptr;
  };

  server.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
               write_json(res, 200, {{"status", "ok"}});
             }));

  server.Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req, true);
                ChatSession session;
                if (auto it = body.find("preferences_profile"); it != body.end() && !it->is_null()) {
                  if (!it->is_string()) throw Error::schema("preferences_profile", "expected string");
                  const std::string name = it->get<std::string>();
                  if (!std::regex_match(name, kProfileName)) {
                    throw Error::schema("preferences_profile", "invalid profile name");
                  }
                  const auto dir = options_.profiles_dir / name;
                  if (options_.profiles_dir.empty() || !std::filesystem::is_directory(dir)) {
                    throw HttpError{404, "PROFILE_NOT_FOUND", "no preference profile " + name};
                  }
                  const ImportResult imported = load_preference_dir(dir);
                  session.load_preferences(imported.docs);
                } else {
                  session.load_preferences({});
                }
                session.last_k = options_.default_k;
                auto slot = store_.create(std::move(session));
                if (!slot) {
                  throw HttpError{507, "STORE_FULL", "session store is full and every session is busy"};
                }
                write_json(res, 201, {{"session_id", slot->session.id}});
              }));

  server.Post(R"(/v1/sessions/([A-Za-z0-9_-]+)/ingest)",
              guarded([this, session_handle, make_client](const httplib::Request& req,
                                                          httplib::Response& res) {
                auto handle = session_handle(req);
                std::lock_guard turn(handle->turn);
                const json body = parse_body(req, false);

                auto client = options_.llm_menu_structuring ? make_client() : nullptr;
                PipelineOptions popts{options_.keyframe, options_.layout, options_.parse,
                                      client.get()};
                PipelineResult result;
                if (body.contains("image")) {
                  if (!body.value("use_external_ocr", false)) {
                    throw Error::schema("use_external_ocr", "image ingest needs use_external_ocr: true");
                  }
                  if (options_.ocr_command.empty()) {
                    throw HttpError{501, "OCR_NOT_CONFIGURED", "no external OCR command configured"};
                  }
                  const auto bytes = decode_base64(detail::require_string(body, "image"));
                  TempFile image(bytes);
                  ExternalOcrOptions ocr{options_.ocr_command, options_.ocr_timeout};
                  // The engine runs on a worker; the session stays locked meanwhile.
                  auto doc = std::async(std::launch::async, [&] {
                               return run_external_ocr(image.path().string(), ocr);
                             }).get();
                  result = run_document_pipeline(doc, std::nullopt, popts);
                } else {
                  const auto detections = detections_from_json(detail::require(body, "detections"));
                  const auto dims = dims_from_json(detail::require(body, "dims"));
                  const json& docs = detail::require(body, "ocr_documents");
                  if (!docs.is_object()) throw Error::schema("ocr_documents", "expected object");
                  OcrSource source = [&docs](int frame) {
                    auto it = docs.find(std::to_string(frame));
                    if (it == docs.end()) {
                      throw Error::schema("ocr_documents",
                                          "no OCR document for keyframe " + std::to_string(frame));
                    }
                    return ocr_document_from_json(*it);
                  };
                  result = run_pipeline(detections, dims, source, popts);
                }

                ChatSession& session = handle->session;
                session.menu = result.menu;
                session.history.clear();
                session.rejected_items.clear();
                handle->set_menu_snapshot(std::make_shared<const DigitalMenu>(result.menu));
                write_json(res, 200, menu_to_json(result.menu));
              }));

  auto require_menu = [](const ChatSession& session) -> const DigitalMenu& {
    if (!session.menu) throw HttpError{409, "NO_MENU", "ingest a menu before chatting"};
    return *session.menu;
  };

  server.Post(R"(/v1/sessions/([A-Za-z0-9_-]+)/chat)",
              guarded([this, session_handle, make_client, require_menu](
                          const httplib::Request& req, httplib::Response& res) {
                auto handle = session_handle(req);
                const json body = parse_body(req, false);
                const std::string query = detail::require_string(body, "query");
                if (unicode::trim(query).empty()) throw Error::schema("query", "must not be empty");
                std::size_t k = options_.default_k;
                if (auto it = body.find("k"); it != body.end() && !it->is_null()) {
                  if (!it->is_number_integer() || it->get<long long>() < 1) {
                    throw Error::schema("k", "expected a positive integer");
                  }
                  k = it->get<std::size_t>();
                }
                auto client = make_client();
                std::lock_guard turn(handle->turn);
                ChatSession& session = handle->session;
                const DigitalMenu& menu = require_menu(session);
                const Recommendation rec = chat(session, query, k, client.get(), options_.recommend);
                write_json(res, 200, to_json(rec, menu));
              }));

  server.Post(R"(/v1/sessions/([A-Za-z0-9_-]+)/feedback)",
              guarded([this, session_handle, make_client, require_menu](
                          const httplib::Request& req, httplib::Response& res) {
                auto handle = session_handle(req);
                const json body = parse_body(req, false);
                const json& ids_json = detail::require_array(body, "rejected_item_ids");
                std::vector<std::string> ids;
                for (const auto& id : ids_json) {
                  if (!id.is_string()) throw Error::schema("rejected_item_ids", "expected strings");
                  ids.push_back(id.get<std::string>());
                }
                auto client = make_client();
                std::lock_guard turn(handle->turn);
                ChatSession& session = handle->session;
                const DigitalMenu& menu = require_menu(session);
                const Recommendation rec = regenerate(session, ids, client.get(), options_.recommend);
                write_json(res, 200, to_json(rec, menu));
              }));

  server.Get(R"(/v1/sessions/([A-Za-z0-9_-]+)/menu)",
             guarded([session_handle](const httplib::Request& req, httplib::Response& res) {
               auto handle = session_handle(req);
               auto menu = handle->menu_snapshot();
               if (!menu) throw HttpError{409, "NO_MENU", "no menu ingested yet"};
               write_json(res, 200, menu_to_json(*menu));
             }));

  if (!options_.static_dir.empty()) {
    server.set_mount_point("/", options_.static_dir.string());
  }

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const std::string code = res.status == 404 ? "NOT_FOUND"
                             : res.status == 405 ? "METHOD_NOT_ALLOWED"
                             : res.status == 413 ? "PAYLOAD_TOO_LARGE"
                                                 : "BAD_REQUEST";
    write_error(res, res.status, code, req.method + " " + req.path);
    return httplib::Server::HandlerResponse::Handled;
  });
}

bool MenuService::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int MenuService::start_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) throw Error(ErrorCode::kIoError, "cannot bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void MenuService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace menulens
