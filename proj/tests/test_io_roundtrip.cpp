#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "drtr/checkpoint.hpp"
#include "drtr/config.hpp"
#include "drtr/errors.hpp"
#include "drtr/io.hpp"
#include "drtr/rng.hpp"
#include "test_util.hpp"

using namespace drtr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("drtr_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("feature file binary round trip, CSV fallback") {
    TempDir dir;
    Matrix m(3, 2);
    double v = 0.25;
    for (double& x : m.data()) x = (v += 0.5);
    write_features(dir.file("f.bin"), m);
    const Matrix back = read_features(dir.file("f.bin"));
    CHECK(back == m);

    std::ofstream csv(dir.file("f.csv"));
    csv << "1.5,2\n-3,0.125\n";
    csv.close();
    const Matrix c = read_features(dir.file("f.csv"));
    REQUIRE(c.rows() == 2);
    CHECK(c.at(0, 0) == doctest::Approx(1.5));
    CHECK(c.at(1, 1) == doctest::Approx(0.125));

    std::ofstream ragged(dir.file("bad.csv"));
    ragged << "1,2\n3\n";
    ragged.close();
    CHECK_THROWS_AS(read_features(dir.file("bad.csv")), MalformedInputError);
}

TEST_CASE("graph directory round trip preserves structure and labels") {
    TempDir dir;
    GraphStore g = testutil::random_graph(25, 0.15, 4, 3, 17);
    g.set_labeled_set({0, 3, 7, 12});
    save_graph_dir(dir.file("g"), g);
    const GraphStore back = load_graph_dir(dir.file("g"));
    CHECK(back.edge_list() == g.edge_list());
    CHECK(back.labeled_set() == g.labeled_set());
    CHECK(back.labels() == g.labels());
    // Feature payloads agree at f32 precision (the file is f32).
    for (NodeId v = 0; v < 25; ++v) {
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(back.features().at(v, c) ==
                  doctest::Approx(static_cast<double>(static_cast<float>(g.features().at(v, c)))));
        }
    }
}

TEST_CASE("edge list reader rejects junk") {
    TempDir dir;
    std::ofstream out(dir.file("e.tsv"));
    out << "0\t1\nnot an edge\n";
    out.close();
    CHECK_THROWS_AS(read_edge_list(dir.file("e.tsv")), MalformedInputError);
}

TEST_CASE("config JSON round trip and validation") {
    ScheduleConfig cfg;
    cfg.seed = 123;
    cfg.hops = 2;
    cfg.loss_weights = {0.5, 0.25, 0.25};
    cfg.mode = Mode::gdra;
    const std::string text = config_to_json_text(cfg);
    const ScheduleConfig back = config_from_json_text(text);
    CHECK(back.seed == 123);
    CHECK(back.hops == 2);
    CHECK(back.loss_weights[1] == doctest::Approx(0.25));
    CHECK(back.mode == Mode::gdra);

    CHECK_THROWS_AS(config_from_json_text("{\"nope\": 1}"), MalformedInputError);
    CHECK_THROWS_AS(config_from_json_text("{\"tau0\": -1}"), InvalidArgumentError);
    CHECK_THROWS_AS(config_from_json_text("{\"loss_weights\": [1, 1, 1]}"),
                    InvalidArgumentError);
}

TEST_CASE("checkpoint round trip is bit exact") {
    TempDir dir;
    DiffusionParams p = init_params(5, 8, 3, 4, 42);
    p.hop_logits = {0.1, -0.2, 0.3};
    save_checkpoint(dir.file("a.bin"), p, {1.0, 0.5, 0.25});
    const Checkpoint ck = load_checkpoint(dir.file("a.bin"));
    save_checkpoint(dir.file("b.bin"), ck.params, ck.omega);
    CHECK(slurp(dir.file("a.bin")) == slurp(dir.file("b.bin")));
    CHECK(ck.params.hops() == 3);
    CHECK(ck.params.feature_dim() == 5);
    CHECK(ck.omega[2] == doctest::Approx(0.25));

    std::ofstream bad(dir.file("bad.bin"), std::ios::binary);
    bad << "NOTMAGIC";
    bad.close();
    CHECK_THROWS_AS(load_checkpoint(dir.file("bad.bin")), MalformedInputError);
}
