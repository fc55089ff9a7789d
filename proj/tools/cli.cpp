#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "menulens/config.hpp"
#include "menulens/error.hpp"
#include "menulens/eval.hpp"
#include "menulens/llm_client.hpp"
#include "menulens/pipeline.hpp"
#include "menulens/prefs.hpp"
#include "menulens/recommend.hpp"
#include "menulens/service.hpp"
#include "menulens/unicode.hpp"

namespace menulens::cli {
namespace {

namespace fs = std::filesystem;

// Bad invocation detected after parsing; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& out_path, const std::string& text, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  file << text;
  if (!file) throw Error(ErrorCode::kIoError, "cannot write " + out_path);
}

LlmClientConfig llm_config(const Config& config, const std::string& endpoint_flag) {
  LlmClientConfig llm;
  llm.endpoint = endpoint_flag.empty() ? config.get_or("llm.endpoint", "") : endpoint_flag;
  llm.model = config.get_or("llm.model", llm.model);
  llm.token_env_var = config.get_or("llm.token_env", "");
  llm.timeout_seconds = config.get_double("llm.timeout_seconds", llm.timeout_seconds);
  llm.max_retries = static_cast<int>(config.get_int("llm.max_retries", llm.max_retries));
  llm.backoff_seconds = config.get_double("llm.backoff_seconds", llm.backoff_seconds);
  return llm;
}

std::unique_ptr<ChatClient> make_llm(const Config& config, const std::string& endpoint_flag) {
  LlmClientConfig llm = llm_config(config, endpoint_flag);
  if (llm.endpoint.empty()) {
    throw UsageError("no model endpoint: pass --llm-endpoint or set llm.endpoint");
  }
  llm.validate();
  return std::make_unique<HttpChatClient>(std::move(llm));
}

// --- pipeline run -----------------------------------------------------------

struct PipelineArgs {
  std::string detections;
  std::string ocr_dir;
  std::string out;
  std::string dims;
  bool llm = false;
  std::string llm_endpoint;
};

int pipeline_run(const PipelineArgs& a, const Config& config, std::ostream& out,
                 std::ostream& err) {
  const nlohmann::json j = nlohmann::json::parse(read_file(a.detections), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParseError, "detections file is not JSON");
  std::vector<Detection> detections;
  ImageDims dims;
  if (j.is_object()) {
    detections = detections_from_json(j.at("detections"));
    dims = dims_from_json(j.at("dims"));
  } else {
    detections = detections_from_json(j);
    if (a.dims.empty()) throw UsageError("a bare detections array needs --dims WIDTHxHEIGHT");
    const auto x = a.dims.find('x');
    if (x == std::string::npos) throw UsageError("--dims expects WIDTHxHEIGHT");
    dims = {std::stoi(a.dims.substr(0, x)), std::stoi(a.dims.substr(x + 1))};
  }
  std::unique_ptr<ChatClient> client;
  if (a.llm) client = make_llm(config, a.llm_endpoint);
  PipelineOptions options;
  options.llm = client.get();
  const PipelineResult result =
      run_pipeline(detections, dims, ocr_directory_source(a.ocr_dir), options);
  err << "keyframe: " << *result.keyframe << "\n";
  write_output(a.out, menu_to_json_string(result.menu) + "\n", out);
  return kExitOk;
}

// --- menu parse -------------------------------------------------------------

struct MenuParseArgs {
  std::string ocr;
  std::string out;
  std::string format = "json";
  bool dump_layout = false;
  bool llm = false;
  std::string llm_endpoint;
};

int menu_parse(const MenuParseArgs& a, const Config& config, std::ostream& out) {
  const OcrDocument doc = parse_ocr_document(read_file(a.ocr));
  if (a.dump_layout) {
    write_output(a.out, to_json(analyze_layout(doc)).dump(2) + "\n", out);
    return kExitOk;
  }
  std::unique_ptr<ChatClient> client;
  if (a.llm) client = make_llm(config, a.llm_endpoint);
  PipelineOptions options;
  options.llm = client.get();
  const PipelineResult result = run_document_pipeline(doc, std::nullopt, options);
  if (a.format == "markdown") {
    write_output(a.out, menu_to_markdown(result.menu), out);
  } else if (a.format == "text") {
    write_output(a.out, lines_to_text(result.layout), out);
  } else {
    write_output(a.out, menu_to_json_string(result.menu) + "\n", out);
  }
  return kExitOk;
}

// --- chat -------------------------------------------------------------------

struct ChatArgs {
  std::string menu;
  std::string prefs;
  bool offline = false;
  std::size_t k = 3;
  std::string llm_endpoint;
};

void print_recommendation(const Recommendation& rec, std::ostream& out) {
  out << rec.text;
  if (!rec.text.empty() && rec.text.back() != '\n') out << '\n';
  out << "ranked:";
  for (const auto& r : rec.ranked) out << ' ' << r.item_id;
  out << "\n\n";
}

int chat_repl(const ChatArgs& a, const Config& config, std::istream& in, std::ostream& out,
              std::ostream& err) {
  ChatSession session;
  session.menu = parse_menu_json(read_file(a.menu));
  if (session.menu->item_count() == 0) throw Error(ErrorCode::kEmptyMenu, "menu has no items");
  if (!a.prefs.empty()) {
    if (!fs::is_directory(a.prefs)) throw UsageError("no preference directory " + a.prefs);
    const ImportResult imported = load_preference_dir(a.prefs);
    for (const auto& w : imported.warnings) err << "warning: " << w << "\n";
    session.load_preferences(imported.docs);
  } else {
    session.load_preferences({});
  }
  session.last_k = a.k;

  std::unique_ptr<ChatClient> client;
  if (!a.offline) {
    const LlmClientConfig llm = llm_config(config, a.llm_endpoint);
    if (llm.endpoint.empty()) {
      err << "no model endpoint configured; answering offline\n";
    } else {
      client = make_llm(config, a.llm_endpoint);
    }
  }

  std::string line;
  while (std::getline(in, line)) {
    const std::string input = unicode::trim(line);
    if (input.empty()) continue;
    if (input == ":quit") break;
    try {
      if (input.rfind(":reject", 0) == 0) {
        std::istringstream ids_stream(input.substr(7));
        std::vector<std::string> ids;
        for (std::string id; ids_stream >> id;) ids.push_back(id);
        print_recommendation(regenerate(session, ids, client.get()), out);
      } else {
        print_recommendation(chat(session, input, a.k, client.get()), out);
      }
    } catch (const Error& e) {
      // A failed turn leaves the session usable.
      err << "error: " << e.code_name() << ": " << e.what() << "\n";
    }
  }
  return kExitOk;
}

// --- eval recall ------------------------------------------------------------

struct EvalArgs {
  std::string parsed;
  std::string truth;
  double theta = kDefaultMatchThreshold;
  std::optional<double> min_recall;
};

int eval_recall(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto parsed = load_parsed_dir(a.parsed);
  const auto truth = load_truth_dir(a.truth);
  const RecallReport report = recall_report(parsed, truth, a.theta);
  out << to_json(report).dump(2) << "\n";
  err << format_recall_table(report);
  if (a.min_recall && report.aggregate_recall < *a.min_recall) {
    err << "aggregate recall below " << *a.min_recall << "\n";
    return kExitBelowThreshold;
  }
  return kExitOk;
}

// --- prefs import -----------------------------------------------------------

struct PrefsArgs {
  std::string source;
  std::string file;
};

int prefs_import(const PrefsArgs& a, std::ostream& out, std::ostream& err) {
  const std::string bytes = read_file(a.file);
  ImportResult result;
  if (a.source == "transactions") {
    result = import_transactions(bytes);
  } else if (a.source == "places") {
    result = import_places(bytes);
  } else if (a.source == "photos") {
    result = import_photos_metadata(bytes);
  } else {
    result = import_manual(bytes);
  }
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : result.docs) docs.push_back(to_json(d));
  out << docs.dump(2) << "\n";
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  if (result.skipped > 0) err << "skipped " << result.skipped << " rows\n";
  return kExitOk;
}

// --- ocr run ----------------------------------------------------------------

struct OcrArgs {
  std::string image;
  std::string command;
  int timeout_ms = 60'000;
};

int ocr_run(const OcrArgs& a, const Config& config, std::ostream& out) {
  std::string command = resolve_ocr_command(a.command);
  if (command.empty()) command = config.get_or("ocr.command", "");
  if (command.empty()) throw UsageError("no OCR command: pass --ocr-cmd or set MENULENS_OCR_CMD");
  const OcrDocument doc =
      run_external_ocr(a.image, {command, std::chrono::milliseconds(a.timeout_ms)});
  out << serialize_ocr_document(doc) << "\n";
  return kExitOk;
}

// --- serve ------------------------------------------------------------------

struct ServeArgs {
  std::string addr = "127.0.0.1:8080";
  std::string static_dir;
  std::string profiles_dir;
  std::string llm_endpoint;
  std::string ocr_command;
  bool offline = false;
  bool llm_menus = false;
  std::size_t capacity = 0;
};

int serve(const ServeArgs& a, const Config& config, std::ostream& err) {
  const auto colon = a.addr.rfind(':');
  if (colon == std::string::npos) throw UsageError("--addr expects host:port");
  const std::string host = a.addr.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--addr expects host:port");
  }

  ServiceOptions options;
  options.capacity = a.capacity > 0
                         ? a.capacity
                         : static_cast<std::size_t>(config.get_int("service.capacity", 1000));
  options.static_dir = a.static_dir.empty() ? config.get_or("service.static_dir", "") : a.static_dir;
  options.profiles_dir =
      a.profiles_dir.empty() ? config.get_or("service.profiles_dir", "") : a.profiles_dir;
  options.ocr_command = resolve_ocr_command(a.ocr_command);
  if (options.ocr_command.empty()) options.ocr_command = config.get_or("ocr.command", "");
  options.llm_menu_structuring = a.llm_menus;
  if (!a.offline) {
    LlmClientConfig llm = llm_config(config, a.llm_endpoint);
    if (!llm.endpoint.empty()) {
      llm.validate();
      options.llm_factory = [llm] { return std::make_unique<HttpChatClient>(llm); };
    } else {
      err << "no model endpoint configured; serving offline\n";
    }
  }
  MenuService service(std::move(options));

  // SIGINT/SIGTERM stop the server cleanly. The signals are blocked before the
  // worker threads exist so only the watcher ever receives them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &stop_signals, &previous);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    // A signal that lands before the listener is up would be lost otherwise.
    while (!done) {
      service.stop();
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });

  err << "listening on " << host << ":" << port << "\n";
  const bool bound = service.listen(host, port);
  done = true;
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  if (!bound) {
    err << "cannot bind " << a.addr << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"menulens: menu reading assistant", "menulens"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Settings file (key = value)");

  auto* pipeline = app.add_subcommand("pipeline", "Full pipeline over recorded frames");
  pipeline->require_subcommand(1);
  PipelineArgs pa;
  auto* pipeline_run_cmd = pipeline->add_subcommand("run", "Keyframe, layout and menu parsing");
  pipeline_run_cmd->add_option("--detections", pa.detections, "Detections JSON")
      ->required()
      ->check(CLI::ExistingFile);
  pipeline_run_cmd->add_option("--ocr-dir", pa.ocr_dir, "Directory of per-frame OCR JSON")
      ->required()
      ->check(CLI::ExistingDirectory);
  pipeline_run_cmd->add_option("--out", pa.out, "Write the menu JSON here instead of stdout");
  pipeline_run_cmd->add_option("--dims", pa.dims, "WIDTHxHEIGHT for a bare detections array");
  pipeline_run_cmd->add_flag("--llm", pa.llm, "Structure the menu with the model");
  pipeline_run_cmd->add_option("--llm-endpoint", pa.llm_endpoint, "Chat-completion URL");

  auto* menu = app.add_subcommand("menu", "Menu structuring");
  menu->require_subcommand(1);
  MenuParseArgs ma;
  auto* menu_parse_cmd = menu->add_subcommand("parse", "Parse one OCR document into a menu");
  menu_parse_cmd->add_option("ocr", ma.ocr, "OCR JSON")->required()->check(CLI::ExistingFile);
  menu_parse_cmd->add_option("--out", ma.out, "Write here instead of stdout");
  menu_parse_cmd->add_option("--format", ma.format, "json, markdown or text")
      ->check(CLI::IsMember({"json", "markdown", "text"}));
  menu_parse_cmd->add_flag("--dump-layout", ma.dump_layout, "Emit the reading-order layout JSON");
  menu_parse_cmd->add_flag("--llm", ma.llm, "Structure the menu with the model");
  menu_parse_cmd->add_option("--llm-endpoint", ma.llm_endpoint, "Chat-completion URL");

  auto* chat_cmd = app.add_subcommand("chat", "Terminal chat over a parsed menu");
  ChatArgs ca;
  chat_cmd->add_option("--menu", ca.menu, "Menu JSON")->required()->check(CLI::ExistingFile);
  chat_cmd->add_option("--prefs", ca.prefs, "Preference profile directory")
      ->check(CLI::ExistingDirectory);
  chat_cmd->add_flag("--offline", ca.offline, "Template answers, no model calls");
  chat_cmd->add_option("-k,--k", ca.k, "Items per answer")->check(CLI::PositiveNumber);
  chat_cmd->add_option("--llm-endpoint", ca.llm_endpoint, "Chat-completion URL");

  auto* eval = app.add_subcommand("eval", "Evaluation");
  eval->require_subcommand(1);
  EvalArgs ea;
  double min_recall = -1;
  auto* recall_cmd = eval->add_subcommand("recall", "Item recall against ground truth");
  recall_cmd->add_option("--parsed", ea.parsed, "Directory of parsed menu JSON")
      ->required()
      ->check(CLI::ExistingDirectory);
  recall_cmd->add_option("--truth", ea.truth, "Directory of ground-truth JSON")
      ->required()
      ->check(CLI::ExistingDirectory);
  recall_cmd->add_option("--theta", ea.theta, "Name similarity threshold")
      ->check(CLI::Range(0.0, 1.0));
  auto* min_recall_opt = recall_cmd->add_option("--min-recall", min_recall,
                                                "Exit 4 when aggregate recall is lower")
                             ->check(CLI::Range(0.0, 1.0));

  auto* prefs = app.add_subcommand("prefs", "Preference data");
  prefs->require_subcommand(1);
  PrefsArgs pr;
  auto* import_cmd = prefs->add_subcommand("import", "Convert a personal-data export to documents");
  import_cmd->add_option("--source", pr.source, "transactions, places, photos or manual")
      ->required()
      ->check(CLI::IsMember({"transactions", "places", "photos", "manual"}));
  import_cmd->add_option("file", pr.file, "Input file")->required()->check(CLI::ExistingFile);

  auto* ocr = app.add_subcommand("ocr", "External OCR engine");
  ocr->require_subcommand(1);
  OcrArgs oa;
  auto* ocr_run_cmd = ocr->add_subcommand("run", "Run the engine on one image");
  ocr_run_cmd->add_option("image", oa.image, "Image file")->required()->check(CLI::ExistingFile);
  ocr_run_cmd->add_option("--ocr-cmd", oa.command, "Command template with {image}");
  ocr_run_cmd->add_option("--timeout-ms", oa.timeout_ms, "Engine timeout")
      ->check(CLI::PositiveNumber);

  auto* serve_cmd = app.add_subcommand("serve", "HTTP service");
  ServeArgs sa;
  serve_cmd->add_option("--addr", sa.addr, "host:port");
  serve_cmd->add_option("--static-dir", sa.static_dir, "Web UI assets")
      ->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--profiles-dir", sa.profiles_dir, "Preference profiles")
      ->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--llm-endpoint", sa.llm_endpoint, "Chat-completion URL");
  serve_cmd->add_option("--ocr-cmd", sa.ocr_command, "OCR command template with {image}");
  serve_cmd->add_option("--capacity", sa.capacity, "Maximum sessions")->check(CLI::PositiveNumber);
  serve_cmd->add_flag("--offline", sa.offline, "Never call the model");
  serve_cmd->add_flag("--llm-menus", sa.llm_menus, "Structure ingested menus with the model");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, out, err);
    return kExitUsage;
  }
  if (*min_recall_opt) ea.min_recall = min_recall;

  try {
    const Config config = Config::discover(config_path);
    if (*pipeline_run_cmd) return pipeline_run(pa, config, out, err);
    if (*menu_parse_cmd) return menu_parse(ma, config, out);
    if (*chat_cmd) return chat_repl(ca, config, in, out, err);
    if (*recall_cmd) return eval_recall(ea, out, err);
    if (*import_cmd) return prefs_import(pr, out, err);
    if (*ocr_run_cmd) return ocr_run(oa, config, out);
    if (*serve_cmd) return serve(sa, config, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.code_name() << ": " << e.what() << "\n";
    if (e.code() == ErrorCode::kNoMenuDetected || e.code() == ErrorCode::kEmptyMenu) {
      return kExitEmptyPipeline;
    }
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace menulens::cli
