#include "doctest.h"

#include <thread>

#include "httplib.h"

#include "bubbleseg/io.hpp"
#include "bubbleseg/pipeline.hpp"
#include "bubbleseg/service.hpp"
#include "support.hpp"

using namespace bubbleseg;
using nlohmann::json;

namespace {

// A small dataset served on a free port for the duration of one test case.
struct Running {
  std::filesystem::path root;
  app::Service service;
  int port;
  std::thread thread;
  httplib::Client client;

  explicit Running(const std::string& name, const std::optional<std::filesystem::path>& ckpt = std::nullopt)
      : root(make_data(name)),
        service(root, PipelineConfig{}, ckpt),
        port(service.bind("127.0.0.1", 0)),
        thread([this] { service.run(); }),
        client("127.0.0.1", port) {
    client.set_connection_timeout(5);
    client.set_read_timeout(60);
  }
  ~Running() {
    service.stop();
    thread.join();
  }

  static std::filesystem::path make_data(const std::string& name) {
    const auto dir = testing::temp_dir(name);
    synth::SynthConfig sc;
    sc.width = sc.height = 64;
    sc.n_bubbles_min = 2;
    sc.n_bubbles_max = 4;
    sc.seed = 8;
    synth::generate_dataset(sc, {2, 2, false}, dir);
    return dir;
  }

  std::string first_test_id() const { return app::Dataset(root).split("test").front().id; }
};

std::string error_code(const httplib::Result& r) { return json::parse(r->body)["error"]["code"].get<std::string>(); }

}  // namespace

TEST_CASE("health and image listing") {
  Running s("svc_list");
  const auto health = s.client.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");

  const auto list = s.client.Get("/api/images");
  REQUIRE(list);
  const auto j = json::parse(list->body);
  REQUIRE(j.size() == 4);
  CHECK(j[0]["split"] == "train");
  CHECK(j[3]["split"] == "test");

  const auto id = j[0]["id"].get<std::string>();
  const auto png = s.client.Get("/api/images/" + id);
  REQUIRE(png);
  CHECK(png->status == 200);
  CHECK(png->get_header_value("Content-Type") == "image/png");
  const auto on_disk = io::read_bytes(s.root / j[0]["image"].get<std::string>());
  CHECK(png->body == std::string(on_disk.begin(), on_disk.end()));

  const auto missing = s.client.Get("/api/images/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(error_code(missing) == "NotFound");
}

TEST_CASE("annotation writes carry revisions") {
  Running s("svc_rev");
  const auto id = s.first_test_id();
  const auto first = s.client.Get("/api/annotations/" + id);
  REQUIRE(first);
  CHECK(first->status == 200);
  CHECK(first->get_header_value("X-Revision") == "0");
  const auto original = io::parse_annotation(first->body);
  CHECK(original.image_id == id);
  CHECK(first->body == io::serialize_annotation(original));

  // Drop one instance and write it back.
  auto edited = original;
  REQUIRE_FALSE(edited.instances.empty());
  edited.instances.pop_back();
  auto body = io::to_json(edited);
  body["revision"] = 0;
  const auto put = s.client.Put("/api/annotations/" + id, body.dump(), "application/json");
  REQUIRE(put);
  CHECK(put->status == 200);
  CHECK(put->get_header_value("X-Revision") == "1");

  const auto again = s.client.Get("/api/annotations/" + id);
  REQUIRE(again);
  CHECK(again->get_header_value("X-Revision") == "1");
  CHECK(again->body == io::serialize_annotation(edited));
  CHECK(io::read_text(s.root / app::Dataset(s.root).entry(id).annotation) == again->body);

  // A second writer still holding revision 0 is refused and nothing changes.
  body = io::to_json(original);
  body["revision"] = 0;
  const auto stale = s.client.Put("/api/annotations/" + id, body.dump(), "application/json");
  REQUIRE(stale);
  CHECK(stale->status == 409);
  CHECK(json::parse(stale->body)["revision"] == 1);
  CHECK(s.client.Get("/api/annotations/" + id)->body == again->body);
}

TEST_CASE("malformed writes are rejected") {
  Running s("svc_bad");
  const auto id = s.first_test_id();
  const auto path = "/api/annotations/" + id;
  auto status = [&](const std::string& text) {
    const auto r = s.client.Put(path, text, "application/json");
    REQUIRE(r);
    return r->status;
  };
  CHECK(status("{not json") == 400);
  auto body = json::parse(s.client.Get(path)->body);
  CHECK(status(body.dump()) == 400);  // no revision
  body["revision"] = -1;
  CHECK(status(body.dump()) == 400);
  body["revision"] = 0;
  body["width"] = 65;
  CHECK(status(body.dump()) == 400);
  body["width"] = 64;
  body["image_id"] = "other";
  CHECK(status(body.dump()) == 400);
  body["image_id"] = id;
  body["extra"] = 1;
  CHECK(status(body.dump()) == 400);

  const auto unknown = s.client.Put("/api/annotations/nope", R"({"revision":0})", "application/json");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  CHECK(s.client.Get(path)->get_header_value("X-Revision") == "0");
}

TEST_CASE("segment endpoint") {
  SUBCASE("without a checkpoint only the small-bubble branch runs") {
    Running s("svc_seg");
    const auto id = s.first_test_id();
    const auto small = s.client.Post("/api/segment/" + id + "?small_only=true", "", "application/json");
    REQUIRE(small);
    CHECK(small->status == 200);
    const auto set = io::parse_annotation(small->body);
    CHECK(set.image_id == id);
    for (const auto& inst : set.instances) CHECK(inst.source() == InstanceSource::EdgeDetector);

    const auto full = s.client.Post("/api/segment/" + id, "", "application/json");
    REQUIRE(full);
    CHECK(full->status == 503);
    CHECK(error_code(full) == "CheckpointNotFound");

    const auto bad_flag = s.client.Post("/api/segment/" + id + "?small_only=yes", "", "application/json");
    REQUIRE(bad_flag);
    CHECK(bad_flag->status == 400);
    const auto bad_cfg = s.client.Post("/api/segment/" + id + "?small_only=true", R"({"extract":{"x":1}})", "application/json");
    REQUIRE(bad_cfg);
    CHECK(bad_cfg->status == 400);
    CHECK(error_code(bad_cfg) == "ConfigInvalid");
  }
  SUBCASE("with a checkpoint the result matches the library call") {
    const auto dir = testing::temp_dir("svc_ckpt");
    mtnet::NetConfig nc;
    nc.input_size = 64;
    nc.encoder_levels = 2;
    nc.base_channels = 4;
    const auto params = mtnet::init_params<float>(nc, 3);
    mtnet::save_checkpoint(params, dir / "m.mtnp");
    Running s("svc_seg_full", dir / "m.mtnp");
    const auto id = s.first_test_id();
    const auto r = s.client.Post("/api/segment/" + id, "", "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    const app::Dataset data(s.root);
    const auto img = io::read_image(data.image_path(data.entry(id)));
    CHECK(r->body == io::serialize_annotation(app::segment(img, &params, PipelineConfig{}, id)));
  }
}
