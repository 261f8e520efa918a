#include "sketchpix/latent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sketchpix/archive.hpp"

namespace sketchpix {

std::vector<double> interpolation_weights(double step) {
    if (!(step > 0 && step <= 1)) throw std::invalid_argument("interpolation step must be in (0, 1]");
    std::vector<double> w;
    for (std::size_t i = 0;; ++i) {
        const double v = double(i) * step;
        if (v >= 1.0 - 1e-9) break;
        w.push_back(v);
    }
    w.push_back(1.0);
    return w;
}

std::vector<LatentVector> interpolate(const InterpolationSpec& spec) {
    if (spec.z1.size() != spec.z2.size())
        throw std::invalid_argument("interpolation endpoints differ in dimension");
    std::vector<LatentVector> out;
    for (double w : interpolation_weights(spec.step)) {
        LatentVector z(spec.z1.size());
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = w * spec.z1[i] + (1.0 - w) * spec.z2[i];
        out.push_back(std::move(z));
    }
    return out;
}

std::vector<CategoryPair> default_interpolation_pairs() {
    std::vector<CategoryPair> p;
    for (const char* second : {"cat", "pig", "rabbit"})
        for (const char* first : {"bus", "car", "truck"}) p.emplace_back(first, second);
    return p;
}

CategoryPair parse_category_pair(const std::string& text) {
    const auto dash = text.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 == text.size())
        throw std::invalid_argument("category pair '" + text + "' should look like bus-cat");
    return {text.substr(0, dash), text.substr(dash + 1)};
}

std::size_t InterpolationGrid::sketch_count() const {
    std::size_t n = 0;
    for (const auto& r : cells) n += r.size();
    return n;
}

InterpolationGrid interpolation_grid(const Generator& gen,
                                     const std::map<std::string, SketchSequence>& exemplars,
                                     const std::vector<CategoryPair>& pairs, double step,
                                     const SampleConfig& sample) {
    InterpolationGrid g{pairs, interpolation_weights(step), {}};
    std::map<std::string, LatentVector> z;
    for (const auto& [a, b] : pairs)
        for (const auto& c : {a, b}) {
            if (z.count(c)) continue;
            const auto it = exemplars.find(c);
            if (it == exemplars.end()) throw std::invalid_argument("no exemplar for category '" + c + "'");
            z[c] = gen.encode(it->second);
        }
    for (const auto& [a, b] : pairs) {
        std::vector<SketchSequence> row;
        for (const auto& zi : interpolate({z[a], z[b], step})) {
            auto s = gen.generate(zi, sample);
            s.category = a + "-" + b;
            row.push_back(std::move(s));
        }
        g.cells.push_back(std::move(row));
    }
    return g;
}

LatentExport export_latents(const SketchModel& model, const std::vector<SketchSequence>& split,
                            const std::vector<std::string>& categories, std::size_t n,
                            std::uint64_t seed, std::size_t batch_size) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    for (const auto& c : categories) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i].category == c) idx.push_back(i);
        if (idx.size() < n)
            throw std::invalid_argument("category '" + c + "' has " + std::to_string(idx.size()) +
                                        " sketches, cannot export " + std::to_string(n));
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(n);
        std::sort(idx.begin(), idx.end());
        chosen.insert(chosen.end(), idx.begin(), idx.end());
    }
    LatentExport e{model.config().latent_dim(), {}};
    NoGradGuard guard;
    for (std::size_t i = 0; i < chosen.size(); i += batch_size) {
        const std::size_t end = std::min(chosen.size(), i + batch_size);
        std::vector<SketchSequence> seqs;
        for (std::size_t k = i; k < end; ++k) seqs.push_back(split[chosen[k]]);
        std::size_t longest = 1;
        for (const auto& s : seqs) longest = std::max(longest, s.length());
        ModelBatch batch;
        if (encoder_kind(model.variant()) == EncoderKind::Cnn) {
            std::vector<RasterBitmap> views;
            for (const auto& s : seqs) views.push_back(encoder_view(s));
            batch.images = bitmaps_to_tensor(views);
        } else {
            batch.sequences = pad_and_batch(seqs, longest);
        }
        const auto post = model.encode(batch);
        const auto mu = post.mu.data();
        for (std::size_t k = i; k < end; ++k) {
            const double* row = mu.data() + (k - i) * e.dim;
            e.rows.push_back({split[chosen[k]].category, chosen[k], LatentVector(row, row + e.dim)});
        }
    }
    return e;
}

std::string latents_to_csv(const LatentExport& e) {
    std::string out = "category,sample_id";
    for (std::size_t i = 0; i < e.dim; ++i) out += ",z" + std::to_string(i);
    out += "\n";
    char buf[32];
    for (const auto& r : e.rows) {
        out += r.category + "," + std::to_string(r.sample_id);
        for (double v : r.z) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

LatentExport latents_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("category,sample_id", 0) != 0)
        throw std::invalid_argument("latent CSV must start with the header category,sample_id,z0,...");
    LatentExport e;
    e.dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        LatentRow r;
        std::getline(ss, r.category, ',');
        std::getline(ss, cell, ',');
        try {
            r.sample_id = std::stoull(cell);
            while (std::getline(ss, cell, ',')) r.z.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw std::invalid_argument("latent CSV line " + std::to_string(line_no) + " is malformed");
        }
        if (r.z.size() != e.dim)
            throw std::invalid_argument("latent CSV line " + std::to_string(line_no) + " has " +
                                        std::to_string(r.z.size()) + " values, header says " +
                                        std::to_string(e.dim));
        e.rows.push_back(std::move(r));
    }
    return e;
}

void write_latents(const std::filesystem::path& path, const LatentExport& e) {
    const std::string s = latents_to_csv(e);
    write_file_atomic(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

LatentExport read_latents(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return latents_from_csv(std::string(bytes.begin(), bytes.end()));
}

namespace {

using Matrix = std::vector<double>;  // row-major d x d

LatentVector mat_vec(const Matrix& c, const LatentVector& v) {
    const std::size_t d = v.size();
    LatentVector out(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i] += c[i * d + j] * v[j];
    return out;
}

double dot(const LatentVector& a, const LatentVector& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void remove_component(LatentVector& v, const LatentVector& u) {
    const double p = dot(v, u);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * u[i];
}

bool normalize_in_place(LatentVector& v, double min_norm = 0.0) {
    const double n = std::sqrt(dot(v, v));
    if (!(n > min_norm)) return false;
    for (double& x : v) x /= n;
    return true;
}

// Dominant eigenvector of a symmetric PSD matrix, kept orthogonal to
// `against` when given. Images shorter than `zero` count as the null space.
LatentVector power_iteration(const Matrix& c, std::size_t d, const LatentVector* against,
                             double zero) {
    LatentVector v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 + 0.01 * double(i % 7);
    if (against) remove_component(v, *against);
    normalize_in_place(v);
    double lambda = 0.0;
    for (int it = 0; it < 20000; ++it) {
        LatentVector w = mat_vec(c, v);
        if (against) remove_component(w, *against);
        const double next = dot(w, v);
        if (!normalize_in_place(w, zero)) return v;  // null space: any unit vector will do
        const bool done = std::abs(next - lambda) <= 1e-15 * std::max(1.0, std::abs(next)) &&
                          std::abs(std::abs(dot(w, v)) - 1.0) < 1e-15;
        v = std::move(w);
        lambda = next;
        if (done) break;
    }
    return v;
}

}  // namespace

Projection project_2d(const LatentExport& e) {
    if (e.rows.size() < 2) throw std::invalid_argument("projection needs at least two rows");
    const std::size_t d = e.dim, n = e.rows.size();
    if (d < 2) throw std::invalid_argument("projection needs at least two dimensions");
    LatentVector mean(d, 0.0);
    for (const auto& r : e.rows)
        for (std::size_t i = 0; i < d; ++i) mean[i] += r.z[i] / double(n);
    Matrix cov(d * d, 0.0);
    Projection p;
    for (const auto& r : e.rows) {
        LatentVector x(d);
        for (std::size_t i = 0; i < d; ++i) x[i] = r.z[i] - mean[i];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) cov[i * d + j] += x[i] * x[j] / double(n);
    }
    for (std::size_t i = 0; i < d; ++i) p.total_variance += cov[i * d + i];
    if (!(p.total_variance > 0)) throw std::invalid_argument("all latent rows are identical; nothing to project");

    const double zero = 1e-12 * p.total_variance;
    p.components[0] = power_iteration(cov, d, nullptr, zero);
    const double l1 = dot(p.components[0], mat_vec(cov, p.components[0]));
    Matrix deflated = cov;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            deflated[i * d + j] -= l1 * p.components[0][i] * p.components[0][j];
    p.components[1] = power_iteration(deflated, d, &p.components[0], zero);
    // Gram-Schmidt once more against round-off.
    remove_component(p.components[1], p.components[0]);
    if (!normalize_in_place(p.components[1], 1e-6)) {
        LatentVector b(d, 0.0);
        for (std::size_t k = 0; k < d; ++k) {
            std::fill(b.begin(), b.end(), 0.0);
            b[k] = 1.0;
            remove_component(b, p.components[0]);
            if (normalize_in_place(b, 1e-6)) break;
        }
        p.components[1] = b;
    }
    for (const auto& r : e.rows) {
        LatentVector x(d);
        for (std::size_t i = 0; i < d; ++i) x[i] = r.z[i] - mean[i];
        p.points.push_back({dot(x, p.components[0]), dot(x, p.components[1])});
        p.categories.push_back(r.category);
    }
    for (int k = 0; k < 2; ++k) {
        double v = 0;
        for (const auto& pt : p.points) v += pt[k] * pt[k] / double(n);
        p.variances[k] = v;
    }
    return p;
}

std::string projection_to_csv(const Projection& p) {
    std::string out = "category,x,y\n";
    char buf[64];
    for (std::size_t i = 0; i < p.points.size(); ++i) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", p.points[i][0], p.points[i][1]);
        out += p.categories[i] + buf;
    }
    return out;
}

double separation_metric(const LatentExport& e) {
    std::map<std::string, std::pair<LatentVector, std::size_t>> acc;
    for (const auto& r : e.rows) {
        auto& [sum, count] = acc[r.category];
        if (sum.empty()) sum.assign(e.dim, 0.0);
        for (std::size_t i = 0; i < e.dim; ++i) sum[i] += r.z[i];
        ++count;
    }
    if (acc.size() < 2) throw std::invalid_argument("separation metric needs two or more categories");
    std::map<std::string, LatentVector> centroid;
    for (auto& [c, sc] : acc) {
        for (double& v : sc.first) v /= double(sc.second);
        centroid[c] = sc.first;
    }
    auto dist = [](const LatentVector& a, const LatentVector& b) {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    };
    double intra = 0;
    for (const auto& r : e.rows) intra += dist(r.z, centroid[r.category]);
    intra /= double(e.rows.size());
    double inter = 0;
    std::size_t pairs = 0;
    for (auto a = centroid.begin(); a != centroid.end(); ++a)
        for (auto b = std::next(a); b != centroid.end(); ++b, ++pairs) inter += dist(a->second, b->second);
    inter /= double(pairs);
    if (!(intra > 0)) throw std::invalid_argument("every category collapses to a single point");
    return inter / intra;
}

}  // namespace sketchpix
