#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "menulens/pipeline.hpp"
#include "menulens/recommend.hpp"

namespace httplib {
class Server;
}

namespace menulens {

/// Mutex that hands ownership to waiters in arrival order.
class FifoMutex {
 public:
  void lock();
  void unlock();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t now_serving_ = 0;
};

/// One stored session. Mutating requests hold `turn` for their whole run;
/// the menu snapshot is readable without waiting for them.
struct SessionSlot {
  ChatSession session;
  FifoMutex turn;
  std::chrono::steady_clock::time_point created;
  std::chrono::steady_clock::time_point last_used;
  int in_flight = 0;  // guarded by the store mutex

  std::shared_ptr<const DigitalMenu> menu_snapshot() const;
  void set_menu_snapshot(std::shared_ptr<const DigitalMenu> menu);

 private:
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const DigitalMenu> snapshot_;
};

/// In-memory sessions keyed by random URL-safe ids. When full, the session
/// idle for longest is evicted; sessions with requests in flight are never
/// evicted.
class SessionStore {
 public:
  explicit SessionStore(std::size_t capacity) : capacity_(capacity) {}

  /// New session; nullptr when full and nothing can be evicted.
  std::shared_ptr<SessionSlot> create(ChatSession session);

  /// Pins the session (counts as in flight) until the handle is destroyed.
  class Handle {
   public:
    Handle() = default;
    Handle(SessionStore* store, std::shared_ptr<SessionSlot> slot);
    Handle(Handle&&) noexcept;
    Handle& operator=(Handle&&) noexcept;
    ~Handle();
    SessionSlot* operator->() const { return slot_.get(); }
    explicit operator bool() const { return slot_ != nullptr; }

   private:
    void release();
    SessionStore* store_ = nullptr;
    std::shared_ptr<SessionSlot> slot_;
  };

  Handle acquire(const std::string& id);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

  /// 16 random bytes, base64url without padding (22 characters).
  static std::string generate_id();

 private:
  friend class Handle;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  std::size_t capacity_;
};

struct ServiceOptions {
  std::size_t capacity = 1000;
  /// Each subdirectory is a preference profile (see load_preference_dir).
  std::filesystem::path profiles_dir;
  std::filesystem::path static_dir;
  /// Creates a model client per request; offline when empty.
  std::function<std::unique_ptr<ChatClient>()> llm_factory;
  /// Also structure menus with the model (otherwise grammar only).
  bool llm_menu_structuring = false;
  std::string ocr_command;
  std::chrono::milliseconds ocr_timeout{60'000};
  KeyframeOptions keyframe;
  LayoutOptions layout;
  MenuParseOptions parse;
  RecommendOptions recommend;
  std::size_t default_k = 3;
};

/// JSON facade over the pipeline and chat. All error bodies are
/// {"code": SCREAMING_SNAKE, "message": str}.
class MenuService {
 public:
  explicit MenuService(ServiceOptions options);
  ~MenuService();

  void register_routes(httplib::Server& server);

  /// Binds and serves until stop(); returns false if binding failed.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port and serves on a background thread.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

  SessionStore& store() { return store_; }

 private:
  struct Impl;
  ServiceOptions options_;
  SessionStore store_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace menulens
