#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dkmpc/koopman/checkpoint.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

struct Result
{
  int code = -1;
  std::string err;
};

fs::path scratch()
{
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "dkmpc_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args)
{
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string(DKMPC_CLI) + " " + args + " 2> " + err.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text)
{
  std::ofstream(p) << text;
}

/// Linear bicycle model in lifted form; stable enough for the observer design.
fs::path checkpoint()
{
  const fs::path p = scratch() / "model.json";
  if (!fs::exists(p))
    dkmpc::koopman::save_checkpoint(p.string(), testing::bicycle_as_lifted(dkmpc::vehicle::VehicleParams{}, 0.85, 10.0));
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with code 2 and a machine-readable line")
{
  Result r = run("compare --controllers lmpc,nmpc --out " + (scratch() / "m.csv").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("error: kind=usage exit=2 message=") != std::string::npos);
  CHECK(run("").code == 2);
  CHECK(run("fly").code == 2);
  CHECK(run("run --controller eso-dkmpc --out x.csv").code == 2);
  CHECK(run("dimstudy --data x.csv --dims 2,a").code != 0);
}

TEST_CASE("configuration errors exit with code 3")
{
  const fs::path ini = scratch() / "bad.ini";
  write(ini, "[mpc]\nhorizon = 3\n");
  const Result r = run("--config " + ini.string() + " run --controller lmpc --out x.csv");
  CHECK(r.code == 3);
  CHECK(r.err.find("kind=config") != std::string::npos);
  CHECK(run("run --scenario nowhere --controller lmpc --out x.csv").code == 3);
}

TEST_CASE("missing checkpoint exits with code 4")
{
  const Result r = run("run --controller dkmpc --model /nonexistent.json --out " + (scratch() / "t.csv").string());
  CHECK(r.code == 4);
  CHECK(r.err.find("kind=checkpoint") != std::string::npos);
}

TEST_CASE("missing data exits with code 6")
{
  const Result r = run("train --data /nonexistent.csv --out " + (scratch() / "m.json").string());
  CHECK(r.code == 6);
}

TEST_CASE("divergence exits with code 5")
{
  const fs::path ini = scratch() / "push.ini";
  write(ini, "[scenario.push]\nlateral_force = 30000\noffset = 0\nduration = 3\n");
  const Result r = run("--config " + ini.string() + " run --scenario push --controller lmpc --out " +
                       (scratch() / "push.csv").string());
  CHECK(r.code == 5);
  CHECK(r.err.find("kind=divergence") != std::string::npos);
  CHECK(fs::file_size(scratch() / "push.csv") > 0);
}

TEST_CASE("run writes the trace schema")
{
  const fs::path ini = scratch() / "short.ini";
  write(ini, "[scenario.dlc_highmu]\nduration = 1\n");
  const fs::path out = scratch() / "trace.csv";
  const Result r = run("--quiet --config " + ini.string() + " run --scenario dlc_highmu --controller eso-dkmpc --model " +
                       checkpoint().string() + " --out " + out.string());
  CHECK(r.code == 0);
  std::istringstream text(slurp(out));
  std::string header;
  std::getline(text, header);
  CHECK(header == "t,X,Y,theta,Vx,Vy,wr,T,delta_f,Xr,Yr,theta_r,eY,dphi,w_norm,solve_ms");
  int lines = 0;
  for (std::string line; std::getline(text, line);)
    ++lines;
  CHECK(lines == 40);
}

TEST_CASE("compare output is byte-identical across runs")
{
  const fs::path ini = scratch() / "short2.ini";
  write(ini, "[scenario.dlc_highmu]\nduration = 1.5\n");
  const std::string base = "--quiet --seed 4 --config " + ini.string() + " compare --model " + checkpoint().string();
  REQUIRE(run(base + " --out " + (scratch() / "c1.csv").string() + " --traces-dir " + (scratch() / "t1").string())
              .code == 0);
  REQUIRE(run(base + " --out " + (scratch() / "c2.csv").string() + " --traces-dir " + (scratch() / "t2").string())
              .code == 0);
  CHECK(slurp(scratch() / "c1.csv") == slurp(scratch() / "c2.csv"));
  int traces = 0;
  for (const auto& e : fs::directory_iterator(scratch() / "t1")) {
    CHECK(slurp(e.path()) == slurp(scratch() / "t2" / e.path().filename()));
    ++traces;
  }
  CHECK(traces == 3);
  std::istringstream rows(slurp(scratch() / "c1.csv"));
  std::string line;
  std::getline(rows, line);
  std::getline(rows, line);
  CHECK(line.rfind("eso-dkmpc,", 0) == 0);
}

TEST_CASE("collect, train and dimstudy round trip")
{
  const fs::path ini = scratch() / "tiny.ini";
  write(ini, "[collect]\nduration = 3\n[training]\nhidden = 8\nepochs = 2\nseq_len = 5\n");
  const std::string cfg = "--quiet --config " + ini.string();
  const fs::path d1 = scratch() / "d1.csv", d2 = scratch() / "d2.csv";
  REQUIRE(run(cfg + " collect --trajectories 6 --out " + d1.string()).code == 0);
  REQUIRE(run(cfg + " collect --trajectories 6 --out " + d2.string()).code == 0);
  CHECK(slurp(d1) == slurp(d2));
  CHECK(slurp(d1).rfind("traj,k,Vx,Vy,wr,T,delta_f\n", 0) == 0);

  const fs::path m = scratch() / "trained.json";
  CHECK(run(cfg + " train --data " + d1.string() + " --phi 3 --out " + m.string()).code == 0);
  CHECK(dkmpc::koopman::load_checkpoint(m.string()).dims().phi == 3);

  const fs::path rep = scratch() / "dims.csv";
  CHECK(run(cfg + " dimstudy --data " + d1.string() + " --dims 2,3,5,10,15 --out " + rep.string()).code == 0);
  std::istringstream text(slurp(rep));
  std::string line;
  std::getline(text, line);
  CHECK(line == "phi,vx_max,vx_avg,vx_rmse,vy_max,vy_avg,vy_rmse,wr_max,wr_avg,wr_rmse");
  std::vector<std::string> phis;
  while (std::getline(text, line))
    phis.push_back(line.substr(0, line.find(',')));
  CHECK(phis == std::vector<std::string>{"2", "3", "5", "10", "15"});
}
