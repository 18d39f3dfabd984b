#include "dskd/sensedict.hpp"

namespace dskd {

namespace {

constexpr double kDuplicateTol = 1e-9;

bool lex_less_row(const Eigen::MatrixXd& m, int a, int b) {
  for (int c = 0; c < m.cols(); ++c) {
    if (m(a, c) < m(b, c)) return true;
    if (m(a, c) > m(b, c)) return false;
  }
  return false;
}

// Canonical ordering: rows sorted lexicographically.
Eigen::MatrixXd sort_rows(const Eigen::MatrixXd& m) {
  std::vector<int> idx(m.rows());
  for (int i = 0; i < m.rows(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return lex_less_row(m, a, b); });
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i) out.row(i) = m.row(idx[i]);
  return out;
}

// Collapses rows that coincide within tolerance (max-norm).
Eigen::MatrixXd dedup_rows(const Eigen::MatrixXd& m) {
  std::vector<int> keep;
  for (int i = 0; i < m.rows(); ++i) {
    bool dup = false;
    for (int j : keep)
      if ((m.row(i) - m.row(j)).cwiseAbs().maxCoeff() <= kDuplicateTol) {
        dup = true;
        break;
      }
    if (!dup) keep.push_back(i);
  }
  Eigen::MatrixXd out(static_cast<int>(keep.size()), m.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) out.row(i) = m.row(keep[i]);
  return out;
}

int nearest_centroid(const Eigen::MatrixXd& centroids,
                     const Eigen::RowVectorXd& p) {
  int best = 0;
  double best_d = (centroids.row(0) - p).squaredNorm();
  for (int c = 1; c < centroids.rows(); ++c) {
    double d = (centroids.row(c) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double wcss(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
            const std::vector<int>& assignment) {
  double j = 0.0;
  for (int i = 0; i < points.rows(); ++i)
    j += (points.row(i) - centroids.row(assignment[i])).squaredNorm();
  return j;
}

}  // namespace

KmeansResult lloyd_kmeans(const Eigen::MatrixXd& points, int k, u64 seed,
                          int max_iters) {
  const int n = static_cast<int>(points.rows());
  if (k < 1) throw validation_error("lloyd_kmeans: k must be >= 1");
  if (n < 1) throw validation_error("lloyd_kmeans: no points");
  if (k > n) k = n;

  Rng rng(seed);
  KmeansResult res;
  res.centroids.resize(k, points.cols());

  // k-means++ seeding.
  res.centroids.row(0) = points.row(static_cast<int>(rng.below(n)));
  Eigen::VectorXd d2(n);
  for (int i = 0; i < n; ++i)
    d2[i] = (points.row(i) - res.centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    int pick;
    if (total <= 0.0) {
      pick = static_cast<int>(rng.below(n));
    } else {
      double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    }
    res.centroids.row(c) = points.row(pick);
    for (int i = 0; i < n; ++i)
      d2[i] = std::min(d2[i],
                       (points.row(i) - res.centroids.row(c)).squaredNorm());
  }

  res.assignment.assign(n, -1);
  std::vector<int> counts(k);
  for (int iter = 0; iter < max_iters; ++iter) {
    // Assignment step, ties toward the lower centroid index.
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int a = nearest_centroid(res.centroids, points.row(i));
      if (a != res.assignment[i]) {
        res.assignment[i] = a;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    // Update step.
    res.centroids.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      res.centroids.row(res.assignment[i]) += points.row(i);
      counts[res.assignment[i]] += 1;
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) res.centroids.row(c) /= static_cast<double>(counts[c]);

    // Empty clusters are reseeded from the farthest point.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int far_i = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[res.assignment[i]] <= 1) continue;  // keep clusters alive
        double d = (points.row(i) - res.centroids.row(res.assignment[i]))
                       .squaredNorm();
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      if (far_i < 0) break;
      counts[res.assignment[far_i]] -= 1;
      res.assignment[far_i] = c;
      counts[c] = 1;
      res.centroids.row(c) = points.row(far_i);
    }

    res.iterations = iter + 1;
    res.wcss_trace.push_back(wcss(points, res.centroids, res.assignment));
  }
  return res;
}

SenseDict build_sense_dict(const EmbeddingStore& store, u32 k, u64 seed,
                           int threads) {
  if (k < 1) throw validation_error("build_sense_dict: k must be >= 1");
  SenseDict dict;
  dict.d = store.d;
  dict.k = k;

  std::vector<std::pair<u32, const std::vector<Eigen::VectorXd>*>> items;
  items.reserve(store.vectors.size());
  for (const auto& [token, list] : store.vectors)
    if (!list.empty()) items.emplace_back(token, &list);

  std::vector<Eigen::MatrixXd> results(items.size());
  parallel_for(items.size(), threads, [&](std::size_t idx) {
    const auto& [token, list] = items[idx];
    const int n = static_cast<int>(list->size());
    Eigen::MatrixXd points(n, store.d);
    for (int i = 0; i < n; ++i) points.row(i) = (*list)[i].transpose();
    points = sort_rows(points);  // canonical order

    Eigen::MatrixXd centroids;
    if (n <= static_cast<int>(k)) {
      centroids = dedup_rows(points);
    } else {
      auto km = lloyd_kmeans(points, static_cast<int>(k),
                             mix_seed(seed, 0x5E15Eull + token));
      centroids = dedup_rows(sort_rows(km.centroids));
    }
    results[idx] = sort_rows(centroids);
  });

  for (std::size_t i = 0; i < items.size(); ++i)
    dict.token_senses.emplace(items[i].first, std::move(results[i]));
  return dict;
}

const Eigen::MatrixXd* lookup(const SenseDict& dict, u32 token) {
  auto it = dict.token_senses.find(token);
  return it == dict.token_senses.end() ? nullptr : &it->second;
}

const Eigen::MatrixXd* lookup_word(const SenseDict& dict,
                                   const std::string& word) {
  auto it = dict.word_senses.find(word);
  return it == dict.word_senses.end() ? nullptr : &it->second;
}

const Eigen::MatrixXd* senses_for_word(const SenseDict& dict,
                                       const VocabSpec& spec,
                                       const std::string& word) {
  auto wt = spec.word_tokens.find(word);
  if (wt == spec.word_tokens.end()) return nullptr;
  if (wt->second.size() == 1) return lookup(dict, wt->second[0]);
  return lookup_word(dict, word);
}

void save_sense_dict(const SenseDict& dict, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for write: " + path);
  write_magic(os, "DSKDSNSE");
  write_u16(os, 1);
  write_u32(os, static_cast<u32>(dict.d));
  write_u32(os, dict.k);
  write_u32(os,
            static_cast<u32>(dict.token_senses.size() + dict.word_senses.size()));
  auto write_rows = [&](const Eigen::MatrixXd& m) {
    write_u32(os, static_cast<u32>(m.rows()));
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c)
        write_f32(os, static_cast<float>(m(r, c)));
  };
  for (const auto& [token, m] : dict.token_senses) {
    u8 kind = 0;
    write_bytes(os, &kind, 1);
    write_u32(os, token);
    write_rows(m);
  }
  for (const auto& [word, m] : dict.word_senses) {
    u8 kind = 1;
    write_bytes(os, &kind, 1);
    write_u32(os, static_cast<u32>(word.size()));
    write_bytes(os, word.data(), word.size());
    write_rows(m);
  }
}

SenseDict load_sense_dict(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open: " + path);
  expect_magic(is, "DSKDSNSE", path);
  if (read_u16(is) != 1) throw io_error(path + ": unsupported version");
  SenseDict dict;
  dict.d = static_cast<int>(read_u32(is));
  dict.k = read_u32(is);
  u32 entries = read_u32(is);
  auto read_rows = [&]() {
    u32 kt = read_u32(is);
    Eigen::MatrixXd m(kt, dict.d);
    for (u32 r = 0; r < kt; ++r)
      for (int c = 0; c < dict.d; ++c)
        m(r, c) = static_cast<double>(read_f32(is));
    return m;
  };
  for (u32 e = 0; e < entries; ++e) {
    u8 kind = 0;
    read_bytes(is, &kind, 1);
    if (kind == 0) {
      u32 token = read_u32(is);
      dict.token_senses.emplace(token, read_rows());
    } else if (kind == 1) {
      u32 len = read_u32(is);
      std::string word(len, '\0');
      read_bytes(is, word.data(), len);
      dict.word_senses.emplace(std::move(word), read_rows());
    } else {
      throw io_error(path + ": bad key kind");
    }
  }
  return dict;
}

}  // namespace dskd
