// Wiring of the command-line tool: exit codes and file handling.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "jpeg_fixtures.h"

namespace fs = std::filesystem;
using namespace lepton::testing;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lepton_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const Bytes& data) const {
    std::ofstream f(path(name), std::ios::binary);
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  }

  // Runs the tool with output captured to a file; returns the exit code.
  int run(const std::string& args, const std::string& env = "") {
    const std::string out = path("stdout.txt");
    const std::string cmd = env + " " + LEPTON_CLI + " " + args + " > " + out + " 2> " + path("stderr.txt");
    const int rc = std::system(cmd.c_str());
    std::ifstream f(out);
    std::stringstream ss;
    ss << f.rdbuf();
    stdout_ = ss.str();
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  // Nothing but the expected files, in particular no temporaries.
  std::vector<std::string> listing() const {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir_)) {
      const std::string n = e.path().filename().string();
      if (n != "stdout.txt" && n != "stderr.txt") names.push_back(n);
    }
    std::sort(names.begin(), names.end());
    return names;
  }

  fs::path dir_;
  std::string stdout_;
};

Bytes small_photo() {
  EncodeOptions o;
  o.quality = 85;
  return encode_jpeg(crop(load_photo("astronaut.jpg"), 0, 0, 200, 160), o);
}

TEST_F(Cli, CompressAndDecompressRoundTrip) {
  const Bytes jpeg = small_photo();
  write("a.jpg", jpeg);
  EXPECT_EQ(run("compress " + path("a.jpg") + " " + path("a.lep")), 0);
  EXPECT_EQ(run("decompress " + path("a.lep") + " -o " + path("b.jpg")), 0);
  EXPECT_EQ(read_file(path("b.jpg")), jpeg);
  EXPECT_EQ(listing(), (std::vector<std::string>{"a.jpg", "a.lep", "b.jpg"}));
}

TEST_F(Cli, ProgressiveGetsItsOwnExitCodeAndNoOutput) {
  EncodeOptions o;
  o.progressive = true;
  write("p.jpg", encode_jpeg(gradient_image(64, 64, 3, 1), o));
  EXPECT_EQ(run("compress " + path("p.jpg") + " " + path("p.lep")), 10);
  EXPECT_EQ(listing(), std::vector<std::string>{"p.jpg"});
}

TEST_F(Cli, StatusExitCodesAreDistinct) {
  write("t.txt", Bytes(5000, 'x'));
  EXPECT_EQ(run("compress " + path("t.txt") + " " + path("t.lep")), 12);
  EncodeOptions o;
  o.subsampling = Subsampling::k411;
  write("w.jpg", encode_jpeg(gradient_image(64, 64, 3, 2), o));
  EXPECT_EQ(run("compress " + path("w.jpg") + " " + path("w.lep")), 16);
  EXPECT_EQ(listing(), (std::vector<std::string>{"t.txt", "w.jpg"}));
}

TEST_F(Cli, MissingInputIsAnIoError) {
  EXPECT_EQ(run("compress " + path("nope.jpg") + " " + path("x.lep")), 2);
  EXPECT_EQ(run("decompress " + path("nope.lep") + " -o " + path("x.jpg")), 2);
  EXPECT_TRUE(listing().empty());
}

TEST_F(Cli, UnwritableOutputIsAnIoError) {
  write("a.jpg", small_photo());
  EXPECT_EQ(run("compress " + path("a.jpg") + " " + path("no/such/dir/a.lep")), 2);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("compress onlyone"), 1);
  EXPECT_EQ(run("compress a b --segments 99"), 1);
  write("a.jpg", small_photo());
  EXPECT_EQ(run("compress " + path("a.jpg") + " " + path("a.lep") + " --chunk-size 1K"), 1);
  EXPECT_EQ(run("compress " + path("a.jpg") + " " + path("a.lep") + " --chunk-size lots"), 1);
  EXPECT_EQ(listing(), std::vector<std::string>{"a.jpg"});
}

TEST_F(Cli, CorruptContainerLeavesNoOutput) {
  const Bytes jpeg = small_photo();
  write("a.jpg", jpeg);
  ASSERT_EQ(run("compress " + path("a.jpg") + " " + path("a.lep")), 0);
  Bytes lep = read_file(path("a.lep"));
  lep.resize(lep.size() / 2);
  write("cut.lep", lep);
  EXPECT_EQ(run("decompress " + path("cut.lep") + " -o " + path("out.jpg")), 4);
  write("junk.lep", Bytes(300, 7));
  EXPECT_EQ(run("decompress " + path("junk.lep") + " -o " + path("out.jpg")), 4);
  EXPECT_FALSE(fs::exists(path("out.jpg")));
  EXPECT_EQ(listing(), (std::vector<std::string>{"a.jpg", "a.lep", "cut.lep", "junk.lep"}));
}

TEST_F(Cli, ChunkedCompressWritesNumberedChunks) {
  Image big = tile(load_photo("china.jpg"), 900, 700);
  EncodeOptions o;
  o.quality = 92;
  const Bytes jpeg = encode_jpeg(big, o);
  ASSERT_GT(jpeg.size(), 2 * 65536u);
  write("big.jpg", jpeg);
  ASSERT_EQ(run("compress " + path("big.jpg") + " " + path("big.lep") + " --chunk-size 64K"), 0);
  std::string chunks;
  size_t n = 0;
  while (fs::exists(path("big.lep." + std::string(n < 10 ? "000" : "00") + std::to_string(n)))) {
    chunks += " " + path("big.lep." + std::string(n < 10 ? "000" : "00") + std::to_string(n));
    ++n;
  }
  EXPECT_EQ(n, (jpeg.size() + 65535) / 65536);
  ASSERT_EQ(run("decompress" + chunks + " -o " + path("back.jpg")), 0);
  EXPECT_EQ(read_file(path("back.jpg")), jpeg);
}

TEST_F(Cli, DecodeMemoryLimitFromEnvironment) {
  write("a.jpg", small_photo());
  ASSERT_EQ(run("compress " + path("a.jpg") + " " + path("a.lep")), 0);
  EXPECT_EQ(run("decompress " + path("a.lep") + " -o " + path("b.jpg"), "LEPTON_MEM_LIMIT_DECODE=1K"), 14);
  EXPECT_FALSE(fs::exists(path("b.jpg")));
  EXPECT_EQ(run("compress " + path("a.jpg") + " " + path("c.lep"), "LEPTON_MEM_LIMIT_ENCODE=1K"), 15);
  EXPECT_EQ(run("decompress " + path("a.lep") + " -o " + path("b.jpg"), "LEPTON_MEM_LIMIT_DECODE=64M"), 0);
}

TEST_F(Cli, TimeoutExitCode) {
  EncodeOptions o;
  o.quality = 95;
  write("n.jpg", encode_jpeg(noise_image(1024, 1024, 3, 3), o));
  EXPECT_EQ(run("compress " + path("n.jpg") + " " + path("n.lep") + " --timeout 0.000001"), 19);
  EXPECT_FALSE(fs::exists(path("n.lep")));
}

TEST_F(Cli, VerifyJson) {
  write("a.jpg", small_photo());
  ASSERT_EQ(run("verify " + path("a.jpg") + " --json"), 0);
  const auto j = nlohmann::json::parse(stdout_);
  EXPECT_EQ(j["status"], "Success");
  EXPECT_GT(j["output_size"].get<uint64_t>(), 0u);
  EXPECT_TRUE(j["breakdown"].contains("dc"));
  write("t.txt", Bytes(100, 'x'));
  EXPECT_EQ(run("verify " + path("t.txt")), 12);
}

TEST_F(Cli, CorpusReportsEveryFileAndSkipsNonImages) {
  fs::create_directories(dir_ / "c" / "sub");
  write("c/a.jpg", small_photo());
  write("c/sub/b.jpg", encode_jpeg(gradient_image(96, 64, 1, 4), EncodeOptions{}));
  write("c/readme.txt", Bytes(2000, 'r'));
  ASSERT_EQ(run("corpus " + path("c") + " --jobs 2 --report " + path("r.jsonl")), 0);
  std::ifstream f(path("r.jsonl"));
  std::vector<nlohmann::json> lines;
  for (std::string line; std::getline(f, line);) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 4u);
  int not_image = 0;
  for (size_t i = 0; i < 3; ++i) not_image += lines[i]["status"] == "NotAnImage";
  EXPECT_EQ(not_image, 1);
  const auto& s = lines[3]["summary"];
  EXPECT_EQ(s["files"], 3);
  EXPECT_EQ(s["success"], 2);
  EXPECT_EQ(s["roundtrip_failures"], 0);
  EXPECT_TRUE(s["ratio"].contains("stddev"));
  EXPECT_TRUE(s["parts"].contains("7x7"));
  EXPECT_FALSE(fs::exists(path("r.jsonl.partial")));
  EXPECT_NE(stdout_.find("ratio"), std::string::npos);
}

TEST_F(Cli, StatsLayoutAndBench) {
  ASSERT_EQ(run("stats --layout"), 0);
  EXPECT_NE(stdout_.find("total bins 193324"), std::string::npos);
  write("a.jpg", small_photo());
  ASSERT_EQ(run("bench " + path("a.jpg") + " --iterations 1 --segments 1 2"), 0);
  EXPECT_NE(stdout_.find("Mbps"), std::string::npos);
  EXPECT_EQ(run("stats"), 1);
}

}  // namespace
