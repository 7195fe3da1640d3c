#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cavshift/cli_app.hpp"
#include "cavshift/errors.hpp"
#include "cavshift/operator_cache.hpp"

using namespace cavshift;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory, removed on scope exit.
struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("cavshift_test_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

const char* disk_cavity = R"([cavity]
shape = disk
radius = 1.0
tau = 10.0
resolution = 16
)";

const char* dipole_solver = R"(
[solver]
seed = 0.69, -0.07
sector = even
seed_function = x
)";

int line_of(const std::string& text, const std::string& needle) {
    const auto pos = text.find(needle);
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

}  // namespace

TEST_CASE("run configuration parsing") {
    SUBCASE("defaults and explicit values") {
        const RunConfig rc = parse_run_config_text(std::string(disk_cavity) + dipole_solver +
                                                   "\n[particle]\nz = 0.1, 0.2\nmu_c = 0.25\ndelta = 0.03\n");
        CHECK(rc.resolution == 16);
        CHECK(rc.cavity.tau == 10.0);
        REQUIRE(rc.particle);
        CHECK(rc.particle->particle.mu_c == 0.25);
        CHECK(rc.particle->particle.delta == 0.03);
        CHECK((rc.particle->particle.z - Vec2(0.1, 0.2)).norm() == 0.0);
        CHECK(rc.solver.seeds.size() == 1);
        CHECK(rc.solver.seeds[0].sector == Sector::even);
        CHECK_FALSE(rc.sweep);
    }
    SUBCASE("seed lists") {
        const RunConfig rc =
            parse_run_config_text(std::string(disk_cavity) + "[solver]\nseeds = 0.69 -0.07 even x; 0.25 -0.12 even one\n");
        REQUIRE(rc.solver.seeds.size() == 2);
        CHECK(rc.solver.seeds[1].function == "one");
        CHECK(seed_order("xy") == 2);
        CHECK(seed_order("one") == 0);
    }
    SUBCASE("negative tau names the key and line") {
        const std::string text = "; comment\n[cavity]\nshape = disk\ntau = -2\n";
        try {
            parse_run_config_text(text);
            FAIL("expected a ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("cavity.tau") != std::string::npos);
            CHECK(e.line() == line_of(text, "tau"));
        }
    }
    SUBCASE("unknown keys and sections") {
        CHECK_THROWS_AS(parse_run_config_text(std::string(disk_cavity) + "taus = 3\n"), ConfigError);
        CHECK_THROWS_AS(parse_run_config_text(std::string(disk_cavity) + "[extras]\na = 1\n"), ConfigError);
        CHECK_THROWS_AS(parse_run_config_text("[particle]\nmu_c = 0.5\n"), ConfigError);
    }
    SUBCASE("malformed values") {
        CHECK_THROWS_AS(parse_run_config_text(std::string(disk_cavity) + "eps_c = abc\n"), ConfigError);
        CHECK_THROWS_AS(parse_run_config_text("[cavity]\nresolution = 15\n"), ConfigError);
        CHECK_THROWS_AS(parse_run_config_text("[cavity]\ntau = 1\ntau = 2\n"), ConfigError);
        CHECK_THROWS_AS(parse_run_config_text(std::string(disk_cavity) + "[particle]\ndelta_list = 0.05, 0.05, 0.01\n"),
                        ConfigError);
        CHECK_THROWS_AS(
            parse_run_config_text(std::string(disk_cavity) + "[particle]\nmu_c = 0.5\ndrude_omega_p = 1.0\n"),
            ConfigError);
        CHECK_THROWS_AS(parse_run_config_text(std::string(disk_cavity) + "[solver]\nseed_function = z3\n"), ConfigError);
        CHECK_THROWS_AS(parse_run_config_text(std::string(disk_cavity) + "[sweep]\nparameter = tau\nvalues = 1\n"),
                        ConfigError);
    }
    SUBCASE("tuned plasma frequency") {
        const RunConfig rc =
            parse_run_config_text(std::string(disk_cavity) + "[particle]\ndrude_omega_p = tuned\nz = 0.1, 0.1\n");
        REQUIRE(rc.particle);
        CHECK(rc.particle->tune_omega_p);
        CHECK(rc.particle->particle.drude.has_value());
    }
}

TEST_CASE("serialization round trips") {
    SUBCASE("complex numbers keep every bit") {
        const cplx z{0.1 + 0.2, -1.0 / 3.0};
        const Json j = Json::parse(dump(to_json(z)));
        CHECK(cplx_from_json(j) == z);
        CHECK(std::stod(fmt17(0.1 + 0.2)) == 0.1 + 0.2);
    }
    SUBCASE("shapes") {
        const Shape2D s = Shape2D::star(1.0, {0.0, 0.1}, {0.0, 0.0, 0.03}, Vec2(0.2, -0.1), 0.4);
        const Shape2D t = shape_from_json(Json::parse(dump(shape_to_json(s))));
        CHECK(shape_hash(s, 32) == shape_hash(t, 32));
    }
    SUBCASE("predictions") {
        ShiftPrediction p;
        p.kind = ShiftCase::plasmonic;
        p.omega0 = {0.7, -0.06};
        p.roots = {cplx(1e-4, 2e-5), cplx(-0.03, 0.001)};
        p.c = {0.064, -0.004};
        p.gradient = Vec2c(cplx(1.7, -0.15), cplx(0.0, 1e-9));
        p.m << 1.0, 0.1, 0.1, 2.0;
        p.delta = 0.02;
        p.z = Vec2(0.2, 0.1);
        p.coupling_sq = {3e-5, 1e-6};
        p.lambda_j = 0.37;
        p.degenerate = true;
        p.warnings = {"note"};
        const ShiftPrediction q = prediction_from_json(Json::parse(dump(prediction_to_json(p))));
        CHECK(q.kind == p.kind);
        CHECK(q.roots == p.roots);
        CHECK(q.gradient == p.gradient);
        CHECK(q.m == p.m);
        CHECK(q.z == p.z);
        CHECK(q.lambda_j == p.lambda_j);
        CHECK(q.degenerate);
        CHECK(q.warnings == p.warnings);
        CHECK(dump(prediction_to_json(q)) == dump(prediction_to_json(p)));
    }
    SUBCASE("resonance records") {
        ResonanceRecord r;
        r.omega0 = {0.688, -0.066};
        r.sector = Sector::odd;
        r.lambda0 = {0.1, 0.02};
        r.r = {1.5, -0.3};
        r.c = {0.064, -0.004};
        r.residual = 1e-12;
        r.iterations = 4;
        const ResonanceRecord s = resonance_from_json(Json::parse(dump(resonance_to_json(r))));
        CHECK(s.omega0 == r.omega0);
        CHECK(s.sector == r.sector);
        CHECK(s.c == r.c);
        CHECK(s.iterations == r.iterations);
    }
    SUBCASE("records carry the schema") {
        const Json rec = make_record("shift", Json::object(), Json::object());
        CHECK(rec["schema"] == "cavshift.result");
        CHECK(rec["artifact_version"] == artifact_version());
    }
}

TEST_CASE("operator cache") {
    TempDir tmp;
    FileOperatorCache cache(tmp.path);
    auto model = std::make_shared<CavityModel>(CavityConfig{}, 8, 1);
    const DiscreteOperator op = assemble_k(*model, {0.7, -0.05}, Sector::even, true);
    const std::string key = operator_key(*model, {0.7, -0.05}, Sector::even, true);

    DiscreteOperator got;
    CHECK_FALSE(cache.load(key, got));
    cache.store(key, op);
    REQUIRE(cache.load(key, got));
    CHECK(got.a == op.a);
    CHECK(got.da == op.da);
    CHECK(cache.stats().hits == 1);
    CHECK(cache.stats().writes == 1);

    SUBCASE("corruption is detected") {
        const fs::path f = cache.file_for(key);
        std::string bytes = read_file(f);
        bytes[bytes.size() / 2] ^= 0x5a;
        std::ofstream(f, std::ios::binary) << bytes;
        CHECK_FALSE(cache.load(key, got));
        CHECK(cache.stats().corrupt == 1);
        cache.store(key, op);
        CHECK(cache.load(key, got));
    }
    SUBCASE("truncation is detected") {
        const fs::path f = cache.file_for(key);
        fs::resize_file(f, fs::file_size(f) / 3);
        CHECK_FALSE(cache.load(key, got));
        CHECK(cache.stats().corrupt == 1);
    }
    SUBCASE("the model uses the cache transparently") {
        model->cache = std::make_shared<FileOperatorCache>(tmp.path / "m");
        const DiscreteOperator a = assemble_k(*model, {0.7, -0.05}, Sector::even, true);
        const DiscreteOperator b = assemble_k(*model, {0.7, -0.05}, Sector::even, true);
        CHECK(a.a == b.a);
        CHECK(a.a == op.a);
    }
    SUBCASE("cache directory resolution") {
        CHECK(resolve_cache_dir("/x/y") == "/x/y");
        setenv("CAVSHIFT_CACHE_DIR", "/from/env", 1);
        CHECK(resolve_cache_dir("") == "/from/env");
        CHECK(resolve_cache_dir("/x/y") == "/x/y");
        unsetenv("CAVSHIFT_CACHE_DIR");
        CHECK(resolve_cache_dir("").empty());
    }
}

TEST_CASE("resonances command with a warm cache") {
    TempDir tmp;
    const std::string text = std::string(disk_cavity) + dipole_solver + "orders = 1\n";
    CliOptions opt;
    opt.config = write_file(tmp.path / "run.ini", text).string();
    opt.cache = (tmp.path / "cache").string();
    std::ostringstream log;

    opt.out = (tmp.path / "cold").string();
    CHECK(cmd_resonances(opt, log) == 0);
    opt.out = (tmp.path / "warm").string();
    CHECK(cmd_resonances(opt, log) == 0);

    const std::string cold = read_file(tmp.path / "cold" / "resonances.json");
    const std::string warm = read_file(tmp.path / "warm" / "resonances.json");
    CHECK_FALSE(cold.empty());
    CHECK(cold == warm);

    const Json tc = Json::parse(read_file(tmp.path / "cold" / "resonances.timing.json"));
    const Json tw = Json::parse(read_file(tmp.path / "warm" / "resonances.timing.json"));
    CHECK(tc["cache"]["misses"].get<int>() > 0);
    CHECK(tw["cache"]["misses"].get<int>() == 0);
    CHECK(tw["cache"]["hits"].get<int>() == tc["cache"]["misses"].get<int>());
    CHECK(tc["assembly_phase_seconds"].get<double>() >= 5.0 * tw["assembly_phase_seconds"].get<double>());

    const Json rec = Json::parse(cold);
    CHECK(rec["kind"] == "resonance");
    CHECK(fs::exists(tmp.path / "cold" / "resonances_omega_plane.csv"));
}

TEST_CASE("shipped disk configuration") {
    TempDir tmp;
    CliOptions opt;
    opt.config = std::string(CAVSHIFT_SOURCE_DIR) + "/configs/disk_dipole.ini";
    opt.out = tmp.path.string();
    std::ostringstream log;
    REQUIRE(cmd_resonances(opt, log) == 0);
    const Json j = Json::parse(read_file(tmp.path / "resonances.json"));
    const Json& list = j["result"]["resonances"];
    REQUIRE(list.size() >= 1);
    const ResonanceRecord dip = resonance_from_json(list[0]);
    CHECK(dip.omega0.imag() < 0.0);
    CHECK(std::abs(dip.omega0 - cplx(0.68849071357239306, -0.06615809613391376)) <= 1e-5);
    // the layered oracle is listed alongside
    bool cross = false;
    for (const auto& o : j["result"]["multilayer"]["orders"])
        for (const auto& r : o["roots"])
            if (std::abs(cplx_from_json(r["omega"]) - dip.omega0) <= 1e-5) cross = true;
    CHECK(cross);
}

TEST_CASE("shift command") {
    TempDir tmp;
    std::ostringstream log;
    CliOptions opt;
    opt.out = (tmp.path / "out").string();

    SUBCASE("internal particle with a convergence study") {
        const std::string text = std::string(disk_cavity) + dipole_solver +
                                 "\n[particle]\nz = 0.0, 0.0\nmu_c = 0.5\n"
                                 "delta_list = 0.05, 0.035, 0.02, 0.014, 0.01\n";
        opt.config = write_file(tmp.path / "run.ini", text).string();
        CHECK(cmd_shift(opt, log) == 0);
        const Json j = Json::parse(read_file(tmp.path / "out" / "shift.json"));
        const ShiftPrediction p = prediction_from_json(j["result"]["prediction"]);
        CHECK(p.kind == ShiftCase::internal);
        CHECK(p.roots.size() == 1);
        CHECK(j["result"]["convergence"]["status"] == "complete");
        CHECK(j["result"]["convergence"]["oracle"] == "multilayer");
        CHECK(j["result"]["convergence"]["slope"].get<double>() >= 2.5);
        CHECK(fs::exists(tmp.path / "out" / "convergence.csv"));
    }
    SUBCASE("tuned Drude particle is flagged") {
        const std::string text = std::string(disk_cavity) + dipole_solver +
                                 "\n[particle]\nshape = ellipse\na = 1.0\nb = 0.6\nz = 0.2, 0.1\n"
                                 "delta = 0.02\ndrude_omega_p = tuned\n";
        opt.config = write_file(tmp.path / "run.ini", text).string();
        CHECK(cmd_shift(opt, log) == 0);
        const Json j = Json::parse(read_file(tmp.path / "out" / "shift.json"));
        CHECK(j["result"]["prediction"]["flag"] == "degenerate-enhanced");
        CHECK(j["result"]["prediction"]["roots"].size() >= 2);
    }
    SUBCASE("configuration errors surface as ConfigError") {
        opt.config = write_file(tmp.path / "run.ini", std::string(disk_cavity) + dipole_solver).string();
        CHECK_THROWS_AS(cmd_shift(opt, log), ConfigError);
    }
}
