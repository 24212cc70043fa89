#include "flpre/error.hpp"
#include "flpre/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace flpre;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("flpre_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

using FunctionalCsv = TempDir;
using ModelJson = TempDir;

}  // namespace

TEST_F(FunctionalCsv, GroupsSortsAndAttachesResponses) {
  const auto curves = write("x.csv", "\xEF\xBB\xBFid,t,x\nb,1,3\na,0,1\nb,0,2\na,1,4\na,0.5,5\n");
  auto data = read_functional_csv(curves);
  ASSERT_EQ(data.ids, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(data.samples[1].grid, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(data.samples[1].values, (std::vector<double>{1.0, 5.0, 4.0}));
  EXPECT_FALSE(data.has_responses());
  read_responses_csv(write("y.csv", "id,y\na,2.5\nb,0.5\n"), data);
  EXPECT_TRUE(data.has_responses());
  EXPECT_EQ(data.responses(), (Vector(2) << 0.5, 2.5).finished());
}

TEST_F(FunctionalCsv, ErrorsNameTheLocation) {
  try {
    read_functional_csv(write("bad.csv", "id,t,x\na,0,1\na,0.5,oops\n"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_functional_csv(write("h.csv", "id,s,x\na,0,1\n")), DataError);
  EXPECT_THROW(read_functional_csv(write("r.csv", "id,t,x\na,0,1\na,1.5,1\n")), DataError);
  EXPECT_THROW(read_functional_csv(write("d.csv", "id,t,x\na,0,1\na,0,2\n")), DataError);
  EXPECT_THROW(read_functional_csv(write("s.csv", "id,t,x\na,0,1\n")), DataError);
  EXPECT_THROW(read_functional_csv(dir_ / "missing.csv"), DataError);

  auto data = read_functional_csv(write("ok.csv", "id,t,x\na,0,1\na,1,1\n"));
  EXPECT_THROW(read_responses_csv(write("neg.csv", "id,y\na,-1\n"), data), DataError);
  EXPECT_THROW(read_responses_csv(write("unk.csv", "id,y\nz,1\n"), data), DataError);
  EXPECT_THROW(read_responses_csv(write("none.csv", "id,y\n"), data), DataError);
  EXPECT_NO_THROW(read_responses_csv(write("none2.csv", "id,y\n"), data, false));
}

TEST_F(FunctionalCsv, WriteReadRoundTrip) {
  CurveBatch batch;
  batch.grid = {0.0, 0.1, 1.0 / 3.0, 1.0};
  batch.values = Matrix::Random(3, 4);
  const auto ids = sequential_ids(3);
  write_functional_csv(dir_ / "c.csv", ids, batch);
  const Vector y = (Vector(3) << 0.1, 1.0 / 7.0, 3e5).finished();
  write_responses_csv(dir_ / "y.csv", ids, y);
  auto data = read_functional_csv(dir_ / "c.csv");
  read_responses_csv(dir_ / "y.csv", data);
  EXPECT_EQ(data.ids, ids);
  EXPECT_EQ(data.responses(), y);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(data.samples[i].grid, batch.grid);
    for (int g = 0; g < 4; ++g) EXPECT_EQ(data.samples[i].values[g], batch.values(i, g));
  }
}

TEST_F(ModelJson, RoundTripIsExact) {
  ModelRecord m;
  m.basis = make_basis(5, 3, 2);
  m.fit.method = Method::FLAD;
  m.fit.theta = Vector::Random(m.basis.dimension());
  m.fit.theta[0] = 1.0 / 3.0;
  m.fit.lambda = 1e-4;
  m.fit.converged = true;
  m.fit.n = 123;
  m.fit.loss = 45.678;
  save_model(dir_ / "m.json", m);
  const ModelRecord back = load_model(dir_ / "m.json");
  EXPECT_EQ(back.basis, m.basis);
  EXPECT_EQ(back.fit.theta, m.fit.theta);
  EXPECT_EQ(back.fit.method, Method::FLAD);
  EXPECT_EQ(back.fit.lambda, m.fit.lambda);
  EXPECT_EQ(back.fit.n, 123);
}

TEST_F(ModelJson, RejectsInconsistentDocuments) {
  ModelRecord m;
  m.basis = make_basis(2, 3, 2);
  m.fit.theta = Vector::Zero(m.basis.dimension());
  std::string text = model_to_json(m);
  EXPECT_THROW(model_from_json("{"), DataError);
  std::string wrong_version = text;
  wrong_version.replace(wrong_version.find("\"version\": 1"), 12, "\"version\": 9");
  EXPECT_THROW(model_from_json(wrong_version), DataError);
  std::string wrong_knots = text;
  wrong_knots.replace(wrong_knots.find("\"interior_knots\": 2"), 19, "\"interior_knots\": 3");
  EXPECT_THROW(model_from_json(wrong_knots), DataError);
}

TEST_F(FunctionalCsv, BetaAndSchemeWriters) {
  BetaCurve c;
  c.t = {0.0, 1.0};
  c.beta = {0.5, -0.25};
  write_beta_csv(dir_ / "b.csv", c);
  std::ifstream in(dir_ / "b.csv");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(all, "t,beta\n0,0.5\n1,-0.25\n");

  SubsampleScheme s = probs_uniform(2);
  write_scheme_csv(dir_ / "p.csv", {"x", "y"}, s);
  std::ifstream pin(dir_ / "p.csv");
  std::string p((std::istreambuf_iterator<char>(pin)), {});
  EXPECT_EQ(p, "id,pi\nx,0.5\ny,0.5\n");
}
