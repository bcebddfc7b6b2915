#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "fixtures.hpp"
#include "s3dc/s3dc.h"

namespace fx = s3dc::testing;

namespace {

constexpr const char* kSecret = "sk-capi-7f3a9d1e55c04b";

struct Settings {
  s3dc_settings* ptr = nullptr;
  ~Settings() { s3dc_settings_free(ptr); }
};

std::string obj_with_cube(const fx::TempDir& dir) {
  auto path = dir / "cube.obj";
  s3dc::save_object(fx::make_cube(), path);
  return path.string();
}

}  // namespace

TEST(CApi, SemanticCompressionOfFiftyCharactersIsFiftyEightBytes) {
  fx::TempDir dir;
  auto obj = obj_with_cube(dir);
  Settings s;
  ASSERT_EQ(s3dc_settings_mock(3, &s.ptr), S3DC_OK);
  s3dc_compress_options options{S3DC_MODE_SEMANTIC, 50, 0, 128};
  s3dc_compressed* c = nullptr;
  ASSERT_EQ(s3dc_compress(obj.c_str(), &options, s.ptr, &c), S3DC_OK) << s3dc_last_error();
  std::size_t size = 0;
  ASSERT_NE(s3dc_compressed_data(c, &size), nullptr);
  EXPECT_EQ(size, 58u);
  EXPECT_EQ(std::string(s3dc_compressed_descriptor(c)).size(), 50u);
  EXPECT_EQ(s3dc_compressed_edge_count(c), 0u);
  EXPECT_DOUBLE_EQ(s3dc_compressed_ratio(c), s3dc_compressed_original_bytes(c) / 58.0);
  EXPECT_STREQ(s3dc_last_error(), "");
  s3dc_compressed_free(c);
}

TEST(CApi, ErrorsMapToStatusCodes) {
  fx::TempDir dir;
  auto obj = obj_with_cube(dir);
  Settings s;
  ASSERT_EQ(s3dc_settings_mock(0, &s.ptr), S3DC_OK);
  s3dc_compressed* c = nullptr;

  s3dc_compress_options structured{S3DC_MODE_STRUCTURED, 50, 0, 64};
  EXPECT_EQ(s3dc_compress(obj.c_str(), &structured, s.ptr, &c), S3DC_ERR_DOMAIN);
  EXPECT_EQ(c, nullptr);
  EXPECT_STRNE(s3dc_last_error(), "");

  s3dc_compress_options semantic{S3DC_MODE_SEMANTIC, 50, 0, 64};
  EXPECT_EQ(s3dc_compress((dir / "missing.obj").c_str(), &semantic, s.ptr, &c), S3DC_ERR_IO);
  EXPECT_EQ(std::string(s3dc_last_error()).rfind("load: ", 0), 0u) << s3dc_last_error();
  EXPECT_EQ(s3dc_compress(nullptr, &semantic, s.ptr, &c), S3DC_ERR_USAGE);

  fx::write_text(dir / "bad.s3dc", "S3DX\x01\x00\x00\x00");
  EXPECT_EQ(s3dc_decompress_file((dir / "bad.s3dc").c_str(), s.ptr, (dir / "out").c_str()), S3DC_ERR_BAD_MAGIC);
  EXPECT_EQ(std::string(s3dc_last_error()).rfind("unpack: ", 0), 0u);
  fx::write_text(dir / "short.s3dc", "S3DC\x01");
  EXPECT_EQ(s3dc_decompress_file((dir / "short.s3dc").c_str(), s.ptr, (dir / "out").c_str()), S3DC_ERR_TRUNCATED);

  EXPECT_STREQ(s3dc_status_name(S3DC_OK), "ok");
  EXPECT_STRNE(s3dc_status_name(S3DC_ERR_CONFLICT), "unknown");
}

TEST(CApi, CompressDecompressEvaluate) {
  fx::TempDir dir;
  auto obj = obj_with_cube(dir);
  Settings s;
  ASSERT_EQ(s3dc_settings_mock(5, &s.ptr), S3DC_OK);
  s3dc_compress_options options{S3DC_MODE_SEMANTIC, 100, 0, 128};
  s3dc_compressed* c = nullptr;
  ASSERT_EQ(s3dc_compress(obj.c_str(), &options, s.ptr, &c), S3DC_OK);
  std::size_t size = 0;
  auto* data = s3dc_compressed_data(c, &size);
  s3dc::write_file(dir / "c.s3dc", std::span(data, size));
  s3dc_compressed_free(c);

  const auto out = dir / "decompressed";
  ASSERT_EQ(s3dc_decompress_file((dir / "c.s3dc").c_str(), s.ptr, out.c_str()), S3DC_OK) << s3dc_last_error();
  EXPECT_TRUE(std::filesystem::exists(out / "object.obj"));
  EXPECT_TRUE(std::filesystem::exists(out / "primary_view.png"));
  EXPECT_EQ(std::filesystem::file_size(out / "source.s3dc"), size);

  const char* labels[] = {"orig", "sem"};
  const std::string paths_s[] = {obj, out.string()};
  const char* paths[] = {paths_s[0].c_str(), paths_s[1].c_str()};
  fx::write_text(dir / "rankings.txt", "0 1\n1,0\n\n0 1\n");
  s3dc_eval_options eval{0.05, 2000, 1};
  s3dc_report* report = nullptr;
  ASSERT_EQ(s3dc_evaluate(obj.c_str(), labels, paths, 2, (dir / "rankings.txt").c_str(), &eval, s.ptr, &report),
            S3DC_OK)
      << s3dc_last_error();
  std::string csv = s3dc_report_csv(report);
  EXPECT_EQ(csv.rfind("label,f,c,mr,ratio\norig,1,1,", 0), 0u) << csv;
  // orig sits at positions 0, 1, 0.
  EXPECT_NE(csv.find("orig,1,1,0.3333333333333333,1\n"), std::string::npos) << csv;
  EXPECT_NE(std::string(s3dc_report_table(report)).find("Method"), std::string::npos);
  s3dc_report_free(report);

  fx::write_text(dir / "bad_rankings.txt", "0 0\n");
  EXPECT_EQ(s3dc_evaluate(obj.c_str(), labels, paths, 2, (dir / "bad_rankings.txt").c_str(), &eval, s.ptr, &report),
            S3DC_ERR_VALIDATION);
}

TEST(CApi, BaselineDecimatesAndRecodes) {
  fx::TempDir dir;
  auto sphere = dir / "sphere.obj";
  s3dc::save_object(fx::make_icosphere(3), sphere);
  s3dc_baseline_info info{};
  ASSERT_EQ(s3dc_baseline(sphere.c_str(), 0.5, 40, (dir / "sphere_base").c_str(), &info), S3DC_OK)
      << s3dc_last_error();
  EXPECT_EQ(info.original_triangles, 1280u);
  EXPECT_EQ(info.triangles, 640u);
  EXPECT_GT(info.ratio, 1.5);

  // Every crate vertex lies on a texture seam, so only the texture shrinks.
  auto obj = dir / "crate.obj";
  s3dc::save_object(fx::make_textured_cube(), obj);
  ASSERT_EQ(s3dc_baseline(obj.c_str(), 0.5, 40, (dir / "base").c_str(), &info), S3DC_OK) << s3dc_last_error();
  EXPECT_EQ(info.triangles, 12u);
  EXPECT_TRUE(std::filesystem::exists(dir / "base" / "object_albedo.jpg"));
  EXPECT_EQ(s3dc_baseline(obj.c_str(), 0.5, 0, (dir / "base").c_str(), &info), S3DC_ERR_DOMAIN);
}

TEST(CApi, SparsityProfileOfConstantImages) {
  fx::TempDir dir;
  std::filesystem::create_directories(dir / "views");
  for (int i = 0; i < 3; ++i) {
    s3dc::write_file(dir / "views" / (std::to_string(i) + ".png"),
                     s3dc::encode_png(fx::solid_image(40, 30, 60 * i, 100, 20)));
  }
  const int resolutions[] = {64, 2048};
  const double thresholds[] = {100, 750};
  char* table = nullptr;
  ASSERT_EQ(s3dc_profile_sparsity((dir / "views").c_str(), resolutions, 2, thresholds, 2, &table), S3DC_OK);
  std::string text = table;
  s3dc_string_free(table);
  EXPECT_NE(text.find("100.0"), std::string::npos);
  EXPECT_EQ(text.find(" 99."), std::string::npos) << text;
  EXPECT_NE(text.find("95.45"), std::string::npos) << text;
  EXPECT_NEAR(s3dc_breakeven_sparsity(2048), 1 - 1 / 22.0, 1e-12);
}

TEST(CApi, RankServerLifecycle) {
  fx::TempDir dir;
  s3dc_rank_server* server = nullptr;
  ASSERT_EQ(s3dc_rank_server_create((dir / "rank").c_str(), nullptr, "127.0.0.1", 0, &server), S3DC_OK);
  const int port = s3dc_rank_server_port(server);
  ASSERT_GT(port, 0);
  std::thread t([&] { s3dc_rank_server_run(server); });
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 50 && !res; ++i) {
    res = client.Get("/sessions/0123456789abcdef0123456789abcdef?participant=p");
    if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  s3dc_rank_server_stop(server);
  t.join();
  s3dc_rank_server_free(server);
}

// Credentials come from the environment and must never surface in error
// text, even when the remote end echoes them back.
TEST(CApi, CredentialNeverAppearsInErrors) {
  httplib::Server echo;
  echo.Post(".*", [](const httplib::Request& req, httplib::Response& res) {
    res.status = 500;
    res.set_content("upstream rejected " + req.get_header_value("Authorization"), "text/plain");
  });
  const int port = echo.bind_to_any_port("127.0.0.1");
  std::thread t([&] { echo.listen_after_bind(); });
  echo.wait_until_ready();

  fx::TempDir dir;
  auto obj = obj_with_cube(dir);
  fx::write_text(dir / "backends.conf", "backend = http\ncaptioner.endpoint = http://127.0.0.1:" +
                                            std::to_string(port) + "/v1\ncaptioner.retries = 0\n");
  ::setenv("S3DC_CAPTIONER_API_KEY", kSecret, 1);
  Settings s;
  ASSERT_EQ(s3dc_settings_load((dir / "backends.conf").c_str(), &s.ptr), S3DC_OK) << s3dc_last_error();
  EXPECT_EQ(s3dc_settings_is_mock(s.ptr), 0);
  s3dc_compress_options options{S3DC_MODE_SEMANTIC, 50, 0, 64};
  s3dc_compressed* c = nullptr;
  EXPECT_EQ(s3dc_compress(obj.c_str(), &options, s.ptr, &c), S3DC_ERR_BACKEND);
  std::string message = s3dc_last_error();
  EXPECT_NE(message.find("describe: "), std::string::npos) << message;
  EXPECT_NE(message.find("500"), std::string::npos) << message;
  EXPECT_EQ(message.find(kSecret), std::string::npos) << message;
  ::unsetenv("S3DC_CAPTIONER_API_KEY");

  echo.stop();
  t.join();
}
