#include <gtest/gtest.h>

#include <httplib.h>
#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "menulens/menu.hpp"
#include "menulens/ocr.hpp"
#include "menulens/prefs.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

extern char** environ;

namespace menulens {
namespace {

using nlohmann::json;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out;
  std::ostringstream err;
  CliRun r;
  r.code = cli::run_cli(args, in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fx(const std::string& rel) { return testing::fixture(rel).string(); }

// The golden menus omit null fields and ids; bring both sides to one shape.
json comparable(const json& menu) {
  json out{{"language_hint", menu["language_hint"]}, {"sections", menu["sections"]}};
  for (auto& s : out["sections"]) {
    for (auto& item : s["items"]) {
      item.erase("id");
      if (!item.contains("description")) item["description"] = nullptr;
      if (!item.contains("price")) item["price"] = nullptr;
    }
  }
  return out;
}

json golden_menu(const std::string& id) {
  return comparable(json::parse(testing::read_file(testing::fixture(id + "/expected_menu.json"))));
}

// Keeps a stray user or CI config file out of the way.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ::setenv("HOME", home_.path().c_str(), 1);
    ::unsetenv("MENULENS_CONFIG");
    ::unsetenv("MENULENS_OCR_CMD");
  }
  testing::TempDir home_;
};

// --- help and usage ----------------------------------------------------------------

TEST_F(CliTest, HelpForEveryCommand) {
  const std::vector<std::vector<std::string>> commands{
      {},
      {"pipeline"},
      {"pipeline", "run"},
      {"menu"},
      {"menu", "parse"},
      {"chat"},
      {"eval"},
      {"eval", "recall"},
      {"prefs"},
      {"prefs", "import"},
      {"ocr"},
      {"ocr", "run"},
      {"serve"},
  };
  for (auto args : commands) {
    args.push_back("--help");
    const CliRun r = cli(args);
    EXPECT_EQ(r.code, 0) << args.front();
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << r.out;
    EXPECT_TRUE(r.err.empty()) << r.err;
  }
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"bogus"}).code, 2);
  EXPECT_EQ(cli({"pipeline", "run"}).code, 2);
  EXPECT_EQ(cli({"menu", "parse", fx("ocr/menu_en.ocr.json"), "--format", "pdf"}).code, 2);
  EXPECT_EQ(cli({"chat"}).code, 2);
  EXPECT_EQ(cli({"eval", "recall", "--parsed", fx("truth"), "--truth", fx("truth"), "--theta", "2"}).code,
            2);
  EXPECT_EQ(cli({"prefs", "import", "--source", "bank", fx("prefs/plain/manual.json")}).code, 2);
  EXPECT_EQ(cli({"serve", "--addr", "nonsense"}).code, 2);
  const CliRun r = cli({"menu", "parse", "/no/such/file.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(r.err.empty());
}

// --- pipeline run --------------------------------------------------------------------

TEST_F(CliTest, PipelineRunReproducesGoldenMenus) {
  for (const char* id : testing::kMenuIds) {
    const CliRun r = cli({"pipeline", "run", "--detections", fx(std::string(id) + "/detections.json"), "--ocr-dir",
                       fx(id)});
    ASSERT_EQ(r.code, 0) << id << r.err;
    EXPECT_EQ(comparable(json::parse(r.out)), golden_menu(id)) << id;
    EXPECT_EQ(r.err, "keyframe: " + std::to_string(testing::fixture_keyframe(id)) + "\n");
  }
}

TEST_F(CliTest, PipelineRunWritesOutFile) {
  testing::TempDir dir;
  const std::string out = (dir / "menu.json").string();
  const CliRun r = cli({"pipeline", "run", "--detections", fx("menu_it/detections.json"), "--ocr-dir",
                     fx("menu_it"), "--out", out});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(comparable(json::parse(testing::read_file(out))), golden_menu("menu_it"));
}

TEST_F(CliTest, PipelineRunAcceptsBareArrayWithDims) {
  testing::TempDir dir;
  const json j = json::parse(testing::read_file(testing::fixture("menu_pl/detections.json")));
  testing::write_file(dir / "bare.json", j["detections"].dump());
  const std::string dims = std::to_string(j["dims"]["width"].get<int>()) + "x" +
                           std::to_string(j["dims"]["height"].get<int>());
  const std::string bare = (dir / "bare.json").string();
  EXPECT_EQ(cli({"pipeline", "run", "--detections", bare, "--ocr-dir", fx("menu_pl")}).code, 2);
  const CliRun r = cli({"pipeline", "run", "--detections", bare, "--ocr-dir", fx("menu_pl"), "--dims", dims});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(comparable(json::parse(r.out)), golden_menu("menu_pl"));
}

TEST_F(CliTest, PipelineRunEmptyDetectionsExitThree) {
  testing::TempDir dir;
  testing::write_file(dir / "d.json", R"({"dims":{"width":100,"height":100},"detections":[]})");
  const CliRun r = cli({"pipeline", "run", "--detections", (dir / "d.json").string(), "--ocr-dir", fx("menu_en")});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("NO_MENU_DETECTED"), std::string::npos);
}

TEST_F(CliTest, PipelineRunMissingOcrFrameIsFailure) {
  testing::TempDir dir;
  const CliRun r = cli({"pipeline", "run", "--detections", fx("menu_en/detections.json"), "--ocr-dir",
                     dir.path().string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(r.out.empty());
}

// --- menu parse ----------------------------------------------------------------------

TEST_F(CliTest, MenuParseFormats) {
  const std::string ocr = fx("menu_en/frame_12.ocr.json");
  CliRun r = cli({"menu", "parse", ocr});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(comparable(json::parse(r.out)), golden_menu("menu_en"));
  r = cli({"menu", "parse", ocr, "--format", "markdown"});
  EXPECT_EQ(r.out, testing::read_file(testing::fixture("menu_en/expected_menu.md")));
  r = cli({"menu", "parse", ocr, "--format", "text"});
  EXPECT_EQ(r.out, testing::read_file(testing::fixture("menu_en/expected_text.txt")));
  EXPECT_TRUE(r.err.empty());
}

TEST_F(CliTest, MenuParseDumpLayoutMatchesReadingOrderOracle) {
  const std::string ocr = fx("menu_el/frame_4.ocr.json");
  const CliRun r = cli({"menu", "parse", ocr, "--dump-layout"});
  ASSERT_EQ(r.code, 0);
  const json layout = json::parse(r.out);
  const auto doc = parse_ocr_document(testing::read_file(ocr));
  const auto expected = oracle::reading_order(doc.tokens, doc.dims.width);
  std::vector<std::vector<std::string>> got;
  for (const auto& line : layout["lines"]) {
    std::vector<std::string> words;
    for (const auto& t : line["tokens"]) words.push_back(t["text"]);
    got.push_back(words);
  }
  EXPECT_EQ(got, expected);
}

TEST_F(CliTest, MenuParseEmptyDocumentExitThree) {
  testing::TempDir dir;
  testing::write_file(dir / "e.json", R"({"image_ref":"x","dims":{"width":10,"height":10},"tokens":[]})");
  const CliRun r = cli({"menu", "parse", (dir / "e.json").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, LlmFlagWithoutEndpointIsUsageError) {
  EXPECT_EQ(cli({"menu", "parse", fx("menu_en/frame_12.ocr.json"), "--llm"}).code, 2);
}

// --- chat ----------------------------------------------------------------------------

std::string block(const DigitalMenu& menu, const ConstraintSet& c, const std::vector<oracle::Ranked>& top) {
  std::string s = oracle::fallback_text(menu, c, top) + "ranked:";
  for (const auto& r : top) s += " " + r.id;
  return s + "\n\n";
}

TEST_F(CliTest, ChatTranscriptMatchesOracle) {
  testing::TempDir dir;
  const CliRun parsed = cli({"menu", "parse", fx("menu_en/frame_12.ocr.json"), "--out", (dir / "m.json").string()});
  ASSERT_EQ(parsed.code, 0);
  const DigitalMenu menu = parse_menu_json(testing::read_file(dir / "m.json"));
  const ConstraintSet c =
      extract_constraints(load_preference_dir(testing::fixture("prefs/seafood_peanut")).docs).constraints;

  auto first = oracle::rank(menu, c, {});
  first.resize(3);
  auto second = oracle::rank(menu, c, {first[0].id});
  second.resize(3);

  const CliRun r = cli({"chat", "--menu", (dir / "m.json").string(), "--prefs", fx("prefs/seafood_peanut"),
                     "--offline"},
                    "What do you recommend from the menu?\n\n:reject " + first[0].id +
                        "\n:quit\nnever read\n");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, block(menu, c, first) + block(menu, c, second));
  EXPECT_EQ(second[0].id, first[1].id);  // the next item moves up
}

TEST_F(CliTest, ChatErrorsGoToStderrAndSessionContinues) {
  const CliRun parsed = cli({"menu", "parse", fx("menu_en/frame_12.ocr.json")});
  testing::TempDir dir;
  testing::write_file(dir / "m.json", parsed.out);
  const CliRun r = cli({"chat", "--menu", (dir / "m.json").string(), "--offline", "-k", "1"},
                    ":reject 42.0\nanything\n");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("INVALID_ARGUMENT"), std::string::npos);
  EXPECT_NE(r.out.find("ranked: "), std::string::npos);
}

TEST_F(CliTest, ChatEndOfInputExitsZero) {
  const CliRun parsed = cli({"menu", "parse", fx("menu_it/frame_7.ocr.json")});
  testing::TempDir dir;
  testing::write_file(dir / "m.json", parsed.out);
  const CliRun r = cli({"chat", "--menu", (dir / "m.json").string(), "--offline"}, "");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, ChatEmptyMenuExitThree) {
  testing::TempDir dir;
  testing::write_file(dir / "m.json", menu_to_json_string(DigitalMenu{}));
  const CliRun r = cli({"chat", "--menu", (dir / "m.json").string(), "--offline"}, "hello\n");
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_TRUE(r.out.empty());
}

// --- eval recall -----------------------------------------------------------------------

class EvalCli : public CliTest {
 protected:
  void SetUp() override {
    CliTest::SetUp();
    for (const char* id : testing::kMenuIds) {
      const CliRun r = cli({"pipeline", "run", "--detections", fx(std::string(id) + "/detections.json"),
                         "--ocr-dir", fx(id), "--out", (parsed_ / (std::string(id) + ".json")).string()});
      ASSERT_EQ(r.code, 0);
    }
  }
  testing::TempDir parsed_;
};

TEST_F(EvalCli, CleanFixturesRecallEverything) {
  const CliRun r = cli({"eval", "recall", "--parsed", parsed_.path().string(), "--truth", fx("truth"),
                     "--min-recall", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(r.out);
  std::size_t total = 0;
  for (const char* id : testing::kMenuIds) {
    total += json::parse(testing::read_file(testing::fixture(std::string("truth/") + id + ".json")))["items"].size();
  }
  EXPECT_EQ(report["total"], total);
  EXPECT_EQ(report["matched"], total);
  EXPECT_EQ(report["aggregate_recall"], 1.0);
  EXPECT_NE(r.err.find("TOTAL"), std::string::npos);
}

TEST_F(EvalCli, MissingItemFallsBelowThreshold) {
  const auto file = parsed_ / "menu_en.json";
  json menu = json::parse(testing::read_file(file));
  const std::string dropped = menu["sections"][0]["items"][0]["name"];
  menu["sections"][0]["items"].erase(0);
  testing::write_file(file, menu.dump());

  CliRun r = cli({"eval", "recall", "--parsed", parsed_.path().string(), "--truth", fx("truth"), "--min-recall",
               "0.97"});
  EXPECT_EQ(r.code, 4);
  const json report = json::parse(r.out);
  EXPECT_EQ(report["matched"], 30);
  EXPECT_NEAR(report["aggregate_recall"].get<double>(), 30.0 / 31.0, 1e-12);
  ASSERT_EQ(report["unmatched"].size(), 1u);
  r = cli({"eval", "recall", "--parsed", parsed_.path().string(), "--truth", fx("truth"), "--min-recall",
           "0.96"});
  EXPECT_EQ(r.code, 0);
  r = cli({"eval", "recall", "--parsed", parsed_.path().string(), "--truth", fx("truth")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(dropped), std::string::npos);
}

TEST_F(CliTest, EvalEmptyDirectoriesExitZero) {
  testing::TempDir parsed;
  testing::TempDir truth;
  const CliRun r = cli({"eval", "recall", "--parsed", parsed.path().string(), "--truth", truth.path().string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["total"], 0);
}

// --- prefs import ------------------------------------------------------------------------

TEST_F(CliTest, PrefsImportMatchesImporter) {
  const std::string csv = fx("prefs/seafood_peanut/transactions.csv");
  const CliRun r = cli({"prefs", "import", "--source", "transactions", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  const json docs = json::parse(r.out);
  // Four data rows, one with an unreadable date.
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_NE(r.err.find("skipped 1 rows"), std::string::npos);
  for (const auto& d : docs) EXPECT_EQ(d["source"], "transactions");
  EXPECT_EQ(docs[1]["text"].get<std::string>().find("Ocean Grill"), 0u);
}

TEST_F(CliTest, PrefsImportEmptyExportExitZero) {
  testing::TempDir dir;
  testing::write_file(dir / "t.csv", "date,merchant,amount,currency,category\n");
  testing::write_file(dir / "m.json", "[]");
  CliRun r = cli({"prefs", "import", "--source", "transactions", (dir / "t.csv").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out), json::array());
  r = cli({"prefs", "import", "--source", "manual", (dir / "m.json").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out), json::array());
}

// --- ocr run ------------------------------------------------------------------------------

TEST_F(CliTest, OcrRunUsesCommandTemplate) {
  testing::TempDir dir;
  testing::write_file(dir / "img.png", "not really a png");
  const std::string doc = fx("ocr/menu_en.ocr.json");
  const CliRun r = cli({"ocr", "run", (dir / "img.png").string(), "--ocr-cmd", "test -f {image} && cat '" + doc + "'"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, serialize_ocr_document(parse_ocr_document(testing::read_file(doc))) + "\n");

  ::setenv("MENULENS_OCR_CMD", ("cat '" + doc + "' # {image}").c_str(), 1);
  EXPECT_EQ(cli({"ocr", "run", (dir / "img.png").string()}).out, r.out);
  ::unsetenv("MENULENS_OCR_CMD");
  EXPECT_EQ(cli({"ocr", "run", (dir / "img.png").string()}).code, 2);
  EXPECT_EQ(cli({"ocr", "run", (dir / "img.png").string(), "--ocr-cmd", "exit 1 # {image}"}).code, 1);
}

TEST_F(CliTest, ConfigFileSuppliesOcrCommand) {
  testing::TempDir dir;
  testing::write_file(dir / "img.png", "x");
  testing::write_file(dir / "c.conf", "ocr.command = cat '" + fx("ocr/menu_en.ocr.json") + "' # {image}\n");
  const CliRun r = cli({"--config", (dir / "c.conf").string(), "ocr", "run", (dir / "img.png").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(r.out.empty());
}

// --- the installed binary --------------------------------------------------------------------

struct ProcessResult {
  int code = -1;
  std::string out;
  std::string err;
};

ProcessResult run_binary(const std::string& args, const testing::TempDir& dir) {
  const auto out = dir / "stdout";
  const auto err = dir / "stderr";
  const std::string cmd = std::string("'") + MENULENS_CLI_BINARY + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "' </dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::read_file(out), testing::read_file(err)};
}

TEST_F(CliTest, BinarySeparatesStdoutAndStderr) {
  testing::TempDir dir;
  const auto r = run_binary("pipeline run --detections '" + fx("menu_el/detections.json") + "' --ocr-dir '" +
                                fx("menu_el") + "'",
                            dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(comparable(json::parse(r.out)), golden_menu("menu_el"));
  EXPECT_EQ(r.err, "keyframe: 4\n");
  const auto bad = run_binary("pipeline run --detections /nope --ocr-dir /nope", dir);
  EXPECT_EQ(bad.code, 2);
  EXPECT_TRUE(bad.out.empty());
  EXPECT_FALSE(bad.err.empty());
}

TEST_F(CliTest, BinaryIsDeterministic) {
  testing::TempDir dir;
  const std::string args = "menu parse '" + fx("menu_pl/frame_19.ocr.json") + "'";
  const auto a = run_binary(args, dir);
  const auto b = run_binary(args, dir);
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, ServeAnswersAndStopsOnSigterm) {
  const int port = testing::unused_port();
  const std::string addr = "127.0.0.1:" + std::to_string(port);
  std::vector<std::string> argv_s{MENULENS_CLI_BINARY, "serve", "--addr", addr, "--offline", "--profiles-dir",
                                  fx("prefs")};
  std::vector<char*> argv;
  for (auto& s : argv_s) argv.push_back(s.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_addopen(&actions, 2, "/dev/null", O_WRONLY, 0);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  sigset_t none;
  sigemptyset(&none);
  sigset_t term;
  sigemptyset(&term);
  sigaddset(&term, SIGTERM);
  posix_spawnattr_setsigmask(&attr, &none);
  posix_spawnattr_setsigdefault(&attr, &term);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETSIGMASK | POSIX_SPAWN_SETSIGDEF);
  pid_t pid = 0;
  ASSERT_EQ(posix_spawn(&pid, argv[0], &actions, &attr, argv.data(), environ), 0);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);

  bool up = false;
  for (int i = 0; i < 100 && !up; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    httplib::Client probe("127.0.0.1", port);
    auto res = probe.Get("/healthz");
    up = res && res->status == 200;
  }
  EXPECT_TRUE(up);
  httplib::Client client("127.0.0.1", port);
  const auto created = client.Post("/v1/sessions", R"({"preferences_profile":"plain"})", "application/json");
  ASSERT_TRUE(created) << httplib::to_string(created.error());
  EXPECT_EQ(created->status, 201);

  ::kill(pid, SIGTERM);
  int status = 0;
  pid_t reaped = 0;
  for (int i = 0; i < 100 && reaped == 0; ++i) {
    reaped = ::waitpid(pid, &status, WNOHANG);
    if (reaped == 0) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  if (reaped == 0) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
  }
  EXPECT_EQ(reaped, pid);
  EXPECT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0) << status;
}

}  // namespace
}  // namespace menulens
