#include "md2i/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace md2i {

void DomainDataset::validate() const {
    if (!m.same_shape(x)) throw std::invalid_argument("dataset: mask shape differs from x");
    if (static_cast<int>(col_types.size()) != x.cols)
        throw std::invalid_argument("dataset: col_types size differs from d");
    if (!all_finite(x)) throw std::invalid_argument("dataset: non-finite feature value");
    for (double v : m.data)
        if (v != 0.0 && v != 1.0) throw std::invalid_argument("dataset: mask entry not 0/1");
    for (int j = 0; j < x.cols; ++j) {
        if (col_types[j] != ColType::Continuous) continue;
        for (int i = 0; i < x.rows; ++i) {
            double v = x(i, j);
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("dataset: continuous value outside [0,1]");
        }
    }
    if (has_labels()) {
        if (y.rows != x.rows) throw std::invalid_argument("dataset: label row count differs");
        if (y_is_onehot) {
            for (int i = 0; i < y.rows; ++i) {
                double sum = 0.0;
                for (int j = 0; j < y.cols; ++j) sum += y(i, j);
                if (std::fabs(sum - 1.0) > 1e-9)
                    throw std::invalid_argument("dataset: one-hot row does not sum to 1");
            }
        }
    }
}

std::vector<DomainDataset> synth_rotated_digits(const DomainDataset& base,
                                                const std::vector<double>& angles_deg) {
    if (angles_deg.empty()) throw std::invalid_argument("rotate: no angles given");
    int d = base.d();
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
    if (side * side != d) throw ParseError("rotate: row length " + std::to_string(d) +
                                           " is not a square image");
    std::vector<DomainDataset> out;
    out.reserve(angles_deg.size());
    double center = (side - 1) / 2.0;
    for (size_t a = 0; a < angles_deg.size(); ++a) {
        DomainDataset ds = base;
        ds.domain_id = static_cast<int>(a);
        double theta = angles_deg[a] * M_PI / 180.0;
        double c = std::cos(theta), s = std::sin(theta);
        for (int r = 0; r < base.n(); ++r) {
            const double* src = base.x.row_ptr(r);
            double* dst = ds.x.row_ptr(r);
            for (int ro = 0; ro < side; ++ro) {
                for (int co = 0; co < side; ++co) {
                    // Invert the counter-clockwise rotation about the center;
                    // rows grow downward, so visual CCW is clockwise in (u,v).
                    double u = co - center, v = ro - center;
                    double us = u * c - v * s;
                    double vs = u * s + v * c;
                    double sc = us + center, sr = vs + center;
                    int c0 = static_cast<int>(std::floor(sc));
                    int r0 = static_cast<int>(std::floor(sr));
                    double fc = sc - c0, fr = sr - r0;
                    double acc = 0.0;
                    for (int dr = 0; dr <= 1; ++dr) {
                        for (int dc = 0; dc <= 1; ++dc) {
                            int rr = r0 + dr, cc = c0 + dc;
                            if (rr < 0 || rr >= side || cc < 0 || cc >= side) continue;
                            double wgt = (dr ? fr : 1.0 - fr) * (dc ? fc : 1.0 - fc);
                            acc += wgt * src[rr * side + cc];
                        }
                    }
                    dst[ro * side + co] = std::clamp(acc, 0.0, 1.0);
                }
            }
        }
        out.push_back(std::move(ds));
    }
    return out;
}

DomainDataset inject_mcar_patch(const DomainDataset& ds, const MissingSpec& spec) {
    if (spec.mechanism != MissingSpec::Mechanism::McarPatch)
        throw std::invalid_argument("inject_mcar_patch: wrong mechanism");
    int d = ds.d();
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
    if (side * side != d) throw std::invalid_argument("inject_mcar_patch: rows are not square images");
    if (spec.patch_side > side) throw std::invalid_argument("inject_mcar_patch: patch larger than image");
    if (spec.patch_side < 1) throw std::invalid_argument("inject_mcar_patch: patch side < 1");
    DomainDataset out = ds;
    Rng rng(spec.seed);
    int span = side - spec.patch_side + 1;
    for (int i = 0; i < ds.n(); ++i) {
        int top = rng.uniform_int(span);
        int left = rng.uniform_int(span);
        double* mrow = out.m.row_ptr(i);
        for (int r = top; r < top + spec.patch_side; ++r)
            for (int c = left; c < left + spec.patch_side; ++c) mrow[r * side + c] = 0.0;
    }
    return out;
}

DomainDataset inject_mcar_uniform(const DomainDataset& ds, const MissingSpec& spec) {
    if (spec.mechanism != MissingSpec::Mechanism::McarUniform)
        throw std::invalid_argument("inject_mcar_uniform: wrong mechanism");
    if (spec.rate <= 0.0 || spec.rate >= 1.0)
        throw std::invalid_argument("inject_mcar_uniform: rate must be in (0,1)");
    DomainDataset out = ds;
    Rng rng(spec.seed);
    for (double& v : out.m.data)
        if (rng.uniform() < spec.rate) v = 0.0;
    return out;
}

DomainDataset inject_mar(const DomainDataset& ds, const MissingSpec& spec) {
    if (spec.mechanism != MissingSpec::Mechanism::MarRule)
        throw std::invalid_argument("inject_mar: wrong mechanism");
    int d = ds.d();
    if (d < 2) throw std::invalid_argument("inject_mar: needs at least 2 columns");
    DomainDataset out = ds;
    Rng rng(spec.seed);
    std::vector<double> r(ds.n());
    for (double& v : r) v = rng.uniform();
    int c1 = rng.uniform_int(d);
    int c2 = rng.uniform_int(d - 1);
    if (c2 >= c1) ++c2;  // two distinct condition columns
    auto median_of = [&](int col) {
        std::vector<double> vals(ds.n());
        for (int i = 0; i < ds.n(); ++i) vals[i] = ds.x(i, col);
        std::sort(vals.begin(), vals.end());
        int n = static_cast<int>(vals.size());
        return n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    };
    double mx1 = median_of(c1), mx2 = median_of(c2);
    std::vector<int> cols(d);
    std::iota(cols.begin(), cols.end(), 0);
    rng.shuffle(cols);
    cols.resize(d / 2);  // half of the attributes, condition columns not excluded
    for (int i = 0; i < ds.n(); ++i) {
        if (r[i] > spec.threshold) continue;
        if (!(ds.x(i, c1) <= mx1 || ds.x(i, c2) >= mx2)) continue;
        for (int col : cols) out.m(i, col) = 0.0;
    }
    return out;
}

std::pair<Matrix, Matrix> make_tilde(const Matrix& x, const Matrix& m, Rng& rng) {
    if (!x.same_shape(m)) throw std::invalid_argument("make_tilde: shape mismatch");
    Matrix xt = x;
    for (size_t k = 0; k < xt.data.size(); ++k)
        if (m.data[k] == 0.0) xt.data[k] = rng.uniform(kNoiseLo, kNoiseHi);
    return {std::move(xt), m};
}

std::pair<Matrix, Matrix> make_tilde(const DomainDataset& ds, uint64_t noise_seed) {
    Rng rng(noise_seed);
    return make_tilde(ds.x, ds.m, rng);
}

namespace {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell += ch;
        }
    }
    cells.push_back(cell);
    return cells;
}

double parse_cell(const std::string& cell, int row, const std::string& col_name) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw ParseError("row " + std::to_string(row) + ", column '" + col_name +
                         "': cannot parse value '" + cell + "'");
    }
    if (pos != cell.size())
        throw ParseError("row " + std::to_string(row) + ", column '" + col_name +
                         "': trailing characters in '" + cell + "'");
    return v;
}

}  // namespace

DomainDataset load_tabular(const std::string& path, LabelKind label_kind) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw ParseError("'" + path + "': missing header row");

    std::vector<std::string> names;
    std::vector<ColType> types;
    int label_col = -1;
    auto cells = split_csv_line(header);
    for (size_t j = 0; j < cells.size(); ++j) {
        const std::string& cell = cells[j];
        size_t colon = cell.rfind(':');
        if (colon == std::string::npos)
            throw ParseError("'" + path + "': header cell '" + cell + "' lacks a :type suffix");
        std::string name = cell.substr(0, colon);
        std::string type = cell.substr(colon + 1);
        if (type == "label") {
            if (label_col >= 0) throw ParseError("'" + path + "': multiple label columns");
            label_col = static_cast<int>(j);
            names.push_back(name);
            types.push_back(ColType::Continuous);  // placeholder, not a feature
        } else if (type == "c" || type == "b") {
            names.push_back(name);
            types.push_back(type == "c" ? ColType::Continuous : ColType::Binary);
        } else {
            throw ParseError("'" + path + "': unknown column type '" + type + "'");
        }
    }
    int total_cols = static_cast<int>(cells.size());
    int d = total_cols - (label_col >= 0 ? 1 : 0);

    std::vector<double> xvals;
    std::vector<double> labels;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row_cells = split_csv_line(line);
        if (static_cast<int>(row_cells.size()) != total_cols)
            throw ParseError("'" + path + "': row " + std::to_string(row) + " has " +
                             std::to_string(row_cells.size()) + " cells, expected " +
                             std::to_string(total_cols));
        for (int j = 0; j < total_cols; ++j) {
            double v = parse_cell(row_cells[j], row, names[j]);
            if (j == label_col)
                labels.push_back(v);
            else
                xvals.push_back(v);
        }
        ++row;
    }

    DomainDataset ds;
    ds.x = Matrix(row, d);
    ds.x.data = std::move(xvals);
    ds.m = Matrix(row, d, 1.0);
    ds.col_types.clear();
    for (int j = 0; j < total_cols; ++j)
        if (j != label_col) ds.col_types.push_back(types[j]);

    if (label_col >= 0 && row > 0) {
        bool integral = true;
        double max_label = 0.0;
        for (double v : labels) {
            if (v < 0.0 || v != std::floor(v) || v > 99.0) integral = false;
            max_label = std::max(max_label, v);
        }
        bool classify = label_kind == LabelKind::Classification ||
                        (label_kind == LabelKind::Auto && integral);
        if (classify) {
            if (!integral)
                throw ParseError("'" + path + "': non-integral class label");
            std::vector<int> idx(labels.begin(), labels.end());
            ds.y = one_hot(idx, static_cast<int>(max_label) + 1);
            ds.y_is_onehot = true;
        } else {
            ds.y = Matrix(row, 1);
            std::copy(labels.begin(), labels.end(), ds.y.data.begin());
            ds.y_is_onehot = false;
        }
    }

    // Sibling mask file is optional; absent means fully observed.
    std::ifstream min(path + ".mask");
    if (min) {
        std::string mheader;
        std::getline(min, mheader);
        int mrow = 0;
        while (std::getline(min, line)) {
            if (line.empty()) continue;
            auto row_cells = split_csv_line(line);
            if (static_cast<int>(row_cells.size()) != d)
                throw ParseError("'" + path + ".mask': row " + std::to_string(mrow) +
                                 " has wrong width");
            if (mrow >= row) throw ParseError("'" + path + ".mask': more rows than data");
            for (int j = 0; j < d; ++j) {
                double v = parse_cell(row_cells[j], mrow, "mask");
                if (v != 0.0 && v != 1.0)
                    throw ParseError("'" + path + ".mask': entry not 0/1 at row " +
                                     std::to_string(mrow));
                ds.m(mrow, j) = v;
            }
            ++mrow;
        }
        if (mrow != row) throw ParseError("'" + path + ".mask': fewer rows than data");
    }
    ds.validate();
    return ds;
}

void save_tabular(const DomainDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    for (int j = 0; j < ds.d(); ++j) {
        if (j) out << ',';
        out << 'f' << j << ':' << (ds.col_types[j] == ColType::Continuous ? 'c' : 'b');
    }
    if (ds.has_labels()) out << ",y:label";
    out << '\n';
    std::vector<int> class_of;
    if (ds.has_labels() && ds.y_is_onehot) class_of = argmax_rows(ds.y);
    for (int i = 0; i < ds.n(); ++i) {
        for (int j = 0; j < ds.d(); ++j) {
            if (j) out << ',';
            out << format_value(ds.x(i, j));
        }
        if (ds.has_labels()) {
            out << ',';
            if (ds.y_is_onehot)
                out << class_of[i];
            else
                out << format_value(ds.y(i, 0));
        }
        out << '\n';
    }
    std::ofstream mout(path + ".mask");
    if (!mout) throw ParseError("cannot write '" + path + ".mask'");
    for (int j = 0; j < ds.d(); ++j) {
        if (j) mout << ',';
        mout << 'f' << j << ":b";
    }
    mout << '\n';
    for (int i = 0; i < ds.n(); ++i) {
        for (int j = 0; j < ds.d(); ++j) {
            if (j) mout << ',';
            mout << (ds.m(i, j) != 0.0 ? '1' : '0');
        }
        mout << '\n';
    }
}

BatchIter::BatchIter(int n, int batch_size, uint64_t seed)
    : n_(n), batch_size_(batch_size), rng_(seed) {
    if (batch_size < 1) throw std::invalid_argument("batch_iter: batch_size must be >= 1");
}

std::vector<std::vector<int>> BatchIter::next_epoch() { return draw_batches(n_, batch_size_, rng_); }

std::vector<std::vector<int>> draw_batches(int n, int batch_size, Rng& rng) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        int end = std::min(n, start + batch_size);
        batches.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return batches;
}

Matrix one_hot(const std::vector<int>& labels, int num_classes) {
    Matrix y(static_cast<int>(labels.size()), num_classes);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw std::invalid_argument("one_hot: label out of range");
        y(static_cast<int>(i), labels[i]) = 1.0;
    }
    return y;
}

std::vector<int> argmax_rows(const Matrix& scores) {
    std::vector<int> out(scores.rows);
    for (int i = 0; i < scores.rows; ++i) {
        const double* p = scores.row_ptr(i);
        int best = 0;
        for (int j = 1; j < scores.cols; ++j)
            if (p[j] > p[best]) best = j;
        out[i] = best;
    }
    return out;
}

}  // namespace md2i
