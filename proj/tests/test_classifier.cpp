#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "thermo/thermo.hpp"

namespace fs = std::filesystem;
using namespace thermo;

namespace {

DistanceTable table_of(std::initializer_list<std::pair<std::string, std::array<double, 4>>> rows) {
  DistanceTable t;
  for (const auto& [id, d] : rows) t.rows.push_back({id, d});
  return t;
}

PatientRecord rec(std::string id, FeatureVector f, std::optional<Label> l = std::nullopt) {
  return {std::move(id), f, l};
}

// Reference distances from O_1 to O_2, O_3, O_4.
const DistanceTable kRowsO1 = table_of({{"O_2", {0.172, 14.648, 0.157, 0.053}},
                                        {"O_3", {0.8216, 28.826, 0.833, 0.063}},
                                        {"O_4", {0.414, 37.26, 0.315, 0.070}}});
// Reference distances from O_3 to O_1, O_2, O_4.
const DistanceTable kRowsO3 = table_of({{"O_1", {0.821, 28.826, 0.833, 0.063}},
                                        {"O_2", {0.848, 20.963, 0.898, 0.014}},
                                        {"O_4", {0.811, 15.977, 0.971, 0.006}}});

TEST(Vote, ReferenceRowsForO1) {
  const std::vector<Label> labels{Label::sick, Label::healthy, Label::healthy};
  const auto v = per_feature_vote(kRowsO1, labels);
  EXPECT_EQ(v.label, Label::sick);
  EXPECT_EQ(v.sick_votes, 4);
  for (auto w : v.winner) EXPECT_EQ(w, 0u);
  EXPECT_FALSE(v.tie_resolved);
}

TEST(Vote, ReferenceRowsForO3) {
  const std::vector<Label> labels{Label::sick, Label::sick, Label::healthy};
  const auto v = per_feature_vote(kRowsO3, labels);
  EXPECT_EQ(v.label, Label::healthy);
  EXPECT_EQ(v.healthy_votes, 3);
  EXPECT_EQ(v.winner[0], 2u);
  EXPECT_EQ(v.winner[1], 2u);
  EXPECT_EQ(v.winner[2], 0u);
  EXPECT_EQ(v.winner[3], 2u);
}

TEST(Vote, SingleGalleryPatient) {
  const auto t = table_of({{"a", {1, 2, 3, 4}}});
  const std::vector<Label> labels{Label::sick};
  const auto v = per_feature_vote(t, labels);
  EXPECT_EQ(v.label, Label::sick);
  EXPECT_EQ(v.sick_votes, 4);
}

TEST(Vote, WithinFeatureTieGoesToEarlierRowOrSmallerId) {
  const auto t = table_of({{"z", {1, 1, 1, 1}}, {"a", {1, 1, 1, 1}}});
  const std::vector<Label> labels{Label::healthy, Label::sick};
  EXPECT_EQ(per_feature_vote(t, labels, TieBreak::gallery_order).label, Label::healthy);
  EXPECT_EQ(per_feature_vote(t, labels, TieBreak::id).label, Label::sick);
}

TEST(Vote, TwoTwoSplitUsesNormalisedSums) {
  // a wins f0,f1 narrowly; b wins f2,f3 by a wide margin -> b has the smaller sum.
  const auto t = table_of({{"a", {1.0, 1.0, 10.0, 10.0}}, {"b", {1.1, 1.1, 1.0, 1.0}}});
  const std::vector<Label> labels{Label::sick, Label::healthy};
  const auto v = per_feature_vote(t, labels);
  EXPECT_EQ(v.sick_votes, 2);
  EXPECT_EQ(v.healthy_votes, 2);
  EXPECT_TRUE(v.tie_resolved);
  EXPECT_EQ(v.label, Label::healthy);
}

TEST(Vote, InvariantUnderPositiveColumnScaling) {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> u(0, 1), s(0.01, 100);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PatientRecord> gallery;
    std::vector<Label> labels;
    for (int g = 0; g < 5; ++g) {
      gallery.push_back(rec("g" + std::to_string(g), {u(rng), u(rng), u(rng), u(rng)}));
      labels.push_back(rng() % 2 ? Label::sick : Label::healthy);
    }
    auto query = rec("q", {u(rng), u(rng), u(rng), u(rng)});
    const auto before = per_feature_vote(feature_distances(query, gallery), labels);
    const int f = int(rng() % 4);
    const double k = s(rng);
    query.features[f] *= k;
    for (auto& g : gallery) g.features[f] *= k;
    const auto after = per_feature_vote(feature_distances(query, gallery), labels);
    EXPECT_EQ(before.winner, after.winner);
    EXPECT_EQ(before.label, after.label);
  }
}

TEST(Distances, NaiveAndSymmetric) {
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = rec("a", {u(rng), u(rng), u(rng), u(rng)});
    const auto b = rec("b", {u(rng), u(rng), u(rng), u(rng)});
    const std::vector<PatientRecord> ga{b}, gb{a};
    const auto ab = feature_distances(a, ga), ba = feature_distances(b, gb);
    for (int f = 0; f < 4; ++f) {
      EXPECT_EQ(ab.rows[0].diff[f], std::abs(a.features[f] - b.features[f]));
      EXPECT_EQ(ab.rows[0].diff[f], ba.rows[0].diff[f]);
    }
  }
}

TEST(Distances, IdenticalRecordGivesZeroRowAndErrors) {
  const auto q = rec("q", {0.5, 20, 0.9, 0.1});
  const std::vector<PatientRecord> g{rec("x", {0.5, 20, 0.9, 0.1})};
  for (double d : feature_distances(q, g).rows[0].diff) EXPECT_EQ(d, 0.0);
  try {
    feature_distances(q, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyGallery);
  }
  const std::vector<PatientRecord> self{rec("q", {})};
  EXPECT_THROW(feature_distances(q, self), Error);
}

TEST(Knn, ExactMatchAndConstructedNearest) {
  const std::vector<PatientRecord> g{rec("h1", {0.2, 10, 0.3, 0.01}, Label::healthy),
                                     rec("s1", {0.8, 30, 0.95, 0.08}, Label::sick),
                                     rec("h2", {0.3, 12, 0.4, 0.02}, Label::healthy),
                                     rec("s2", {0.9, 35, 1.0, 0.09}, Label::sick)};
  EXPECT_EQ(knn_euclidean(rec("q", g[2].features), g).label, Label::healthy);
  const auto r = knn_euclidean(rec("q", {0.81, 30.5, 0.94, 0.08}), g);
  EXPECT_EQ(r.label, Label::sick);
  EXPECT_EQ(r.neighbors.front().id, "s1");
  EXPECT_EQ(knn_euclidean(rec("q", {0.81, 30.5, 0.94, 0.08}), g, 3, true).label, Label::sick);
}

TEST(Knn, EvenKLabelTieTakesNearest) {
  const std::vector<PatientRecord> g{rec("a", {0, 0, 0, 0}, Label::healthy), rec("b", {3, 0, 0, 0}, Label::sick),
                                     rec("c", {1, 0, 0, 0}, Label::sick)};
  const auto r = knn_euclidean(rec("q", {0.9, 0, 0, 0}), g, 2);
  EXPECT_EQ(r.neighbors[0].id, "c");
  EXPECT_EQ(r.label, Label::sick);
  const auto r2 = knn_euclidean(rec("q", {0.4, 0, 0, 0}), g, 2);
  EXPECT_EQ(r2.label, Label::healthy);
}

TEST(Knn, DistanceTieAndErrors) {
  const std::vector<PatientRecord> g{rec("z", {1, 0, 0, 0}, Label::healthy), rec("a", {-1, 0, 0, 0}, Label::sick)};
  EXPECT_EQ(knn_euclidean(rec("q", {}), g, 1, false, TieBreak::gallery_order).label, Label::healthy);
  EXPECT_EQ(knn_euclidean(rec("q", {}), g, 1, false, TieBreak::id).label, Label::sick);
  try {
    knn_euclidean(rec("q", {}), g, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GalleryTooSmall);
  }
}

TEST(Knn, NormalisationStopsStdDominating) {
  // Raw distance is dominated by std_raw; after min-max scaling the other
  // three features decide.
  const std::vector<PatientRecord> g{rec("h", {0.2, 20, 0.2, 0.0}, Label::healthy),
                                     rec("s", {0.9, 30, 0.9, 0.1}, Label::sick)};
  const auto q = rec("q", {0.9, 22, 0.9, 0.1});
  EXPECT_EQ(knn_euclidean(q, g, 1, false).label, Label::healthy);
  EXPECT_EQ(knn_euclidean(q, g, 1, true).label, Label::sick);
}

// Records rebuilt from the reference O_1 distances: O_k = O_1 - row_k.
std::vector<PatientRecord> four_patients() {
  const FeatureVector o1{0.9, 40.0, 0.95, 0.10};
  std::vector<PatientRecord> out{rec("O_1", o1, Label::sick)};
  const Label labels[] = {Label::sick, Label::healthy, Label::healthy};
  for (std::size_t r = 0; r < kRowsO1.rows.size(); ++r) {
    FeatureVector f;
    for (int k = 0; k < 4; ++k) f[k] = o1[k] - kRowsO1.rows[r].diff[k];
    out.push_back(rec(kRowsO1.rows[r].id, f, labels[r]));
  }
  return out;
}

TEST(Batch, LeaveOneOutOnFourPatients) {
  const auto recs = four_patients();
  const auto report = classify_batch(recs, recs);
  ASSERT_EQ(report.entries.size(), 4u);
  EXPECT_EQ(report.entries[0].id, "O_1");
  EXPECT_EQ(report.entries[0].predicted, Label::sick);
  EXPECT_EQ(report.entries[0].vote->sick_votes, 4);
  EXPECT_EQ(report.entries[2].id, "O_3");
  EXPECT_EQ(report.entries[2].predicted, Label::healthy);
  for (const auto& e : report.entries) {
    EXPECT_TRUE(e.error.empty());
    EXPECT_EQ(e.distances.rows.size(), 3u);
  }
  EXPECT_TRUE(report.duplicate_ids.empty());
}

TEST(Batch, EmptyDuplicatesAndPerRecordErrors) {
  EXPECT_TRUE(classify_batch({}, four_patients()).entries.empty());
  const std::vector<PatientRecord> recs{rec("x", {}), rec("x", {}), rec("y", {})};
  const std::vector<PatientRecord> gallery{rec("g", {1, 1, 1, 1}, Label::sick)};
  ClassifyOptions opt;
  opt.method = Method::knn;
  opt.k = 2;
  const auto report = classify_batch(recs, gallery, opt);
  EXPECT_EQ(report.duplicate_ids, std::vector<std::string>{"x"});
  ASSERT_EQ(report.entries.size(), 3u);
  for (const auto& e : report.entries) {
    EXPECT_FALSE(e.error.empty());
    EXPECT_FALSE(e.predicted);
  }
}

TEST(Batch, IdTieBreakMakesResultIndependentOfGalleryOrder) {
  std::mt19937_64 rng(127);
  std::uniform_int_distribution<int> u(0, 3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<PatientRecord> gallery, queries;
    for (int g = 0; g < 6; ++g)
      gallery.push_back(rec("g" + std::to_string(g), {double(u(rng)), double(u(rng)), double(u(rng)), double(u(rng))},
                            rng() % 2 ? Label::sick : Label::healthy));
    for (int q = 0; q < 3; ++q)
      queries.push_back(rec("q" + std::to_string(q), {double(u(rng)), double(u(rng)), double(u(rng)), double(u(rng))}));
    auto shuffled = gallery;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto m : {Method::vote, Method::knn}) {
      ClassifyOptions opt;
      opt.method = m;
      opt.k = 3;
      opt.tie_break = TieBreak::id;
      const auto a = classify_batch(queries, gallery, opt), b = classify_batch(queries, shuffled, opt);
      for (std::size_t k = 0; k < queries.size(); ++k) EXPECT_EQ(a.entries[k].predicted, b.entries[k].predicted);
    }
  }
}

TEST(RecordFiles, RoundTripAndErrors) {
  const auto dir = fs::temp_directory_path() / "thermo_classifier_records";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto recs = four_patients();
  write_records(recs, dir / "g.csv", true);
  const auto back = read_records(dir / "g.csv");
  ASSERT_EQ(back.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(back[k].id, recs[k].id);
    EXPECT_EQ(back[k].label, recs[k].label);
    for (int f = 0; f < 4; ++f) EXPECT_NEAR(back[k].features[f], recs[k].features[f], 5e-7);
  }
  std::ofstream(dir / "bad.csv") << "id,a,b\n";
  EXPECT_THROW(read_records(dir / "bad.csv"), Error);
  std::ofstream(dir / "nan.csv") << "id,mean_norm,std_raw,max_norm,asymmetry\nx,1,zz,3,4\n";
  try {
    read_records(dir / "nan.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonNumericCell);
  }
  std::ofstream(dir / "q.csv") << "id,mean_norm,std_raw,max_norm,asymmetry,label\nq,1,2,3,4,\n";
  EXPECT_FALSE(read_records(dir / "q.csv").front().label);
  fs::remove_all(dir);
}

}  // namespace
