#include "gazekit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gazekit {

namespace {

// Crop a window (may extend past the borders; replicate fill) and resize.
Image crop_and_resize(const Image& img, double cx, double cy, double half_w,
                      double half_h, int out_h, int out_w) {
    const int x0 = static_cast<int>(std::lround(cx - half_w));
    const int x1 = static_cast<int>(std::lround(cx + half_w));
    const int y0 = static_cast<int>(std::lround(cy - half_h));
    const int y1 = static_cast<int>(std::lround(cy + half_h));
    Image win(y1 - y0, x1 - x0);
    for (int r = y0; r < y1; ++r) {
        for (int c = x0; c < x1; ++c) {
            win.at(r - y0, c - x0) = img.at_clamped(r, c);
        }
    }
    return bilinear_resize(win, out_h, out_w);
}

}  // namespace

CropResult crop_regions(const Image& image, const PointList& landmarks,
                        const CropConfig& cfg) {
    if (landmarks.size() < 2) {
        throw std::invalid_argument("crop_regions: need at least the two eye centers");
    }
    for (const auto& [x, y] : landmarks) {
        if (x < 0 || y < 0 || x >= image.width || y >= image.height) {
            throw std::invalid_argument("crop_regions: landmark outside image");
        }
    }
    const auto& [lx, ly] = landmarks[0];
    const auto& [rx, ry] = landmarks[1];
    const double iod = std::hypot(lx - rx, ly - ry);
    if (iod < 4.0) {
        throw std::invalid_argument("crop_regions: degenerate interocular distance");
    }

    CropResult out;
    // Face box: bounding box of all landmarks, widened and squared.
    double minx = landmarks[0].first, maxx = minx;
    double miny = landmarks[0].second, maxy = miny;
    for (const auto& [x, y] : landmarks) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
    }
    const double fcx = 0.5 * (minx + maxx);
    const double fcy = 0.5 * (miny + maxy);
    const double half = 0.5 * std::max({maxx - minx, maxy - miny, iod * 1.5}) * 1.45;
    out.face = crop_and_resize(image, fcx, fcy, half, half, cfg.face_size, cfg.face_size);

    const double ehw = cfg.eye_crop_scale * iod;  // half-width
    const double ehh = ehw * cfg.eye_height / cfg.eye_width;
    out.left_eye = crop_and_resize(image, lx, ly, ehw, ehh, cfg.eye_height, cfg.eye_width);
    out.right_eye = crop_and_resize(image, rx, ry, ehw, ehh, cfg.eye_height, cfg.eye_width);
    return out;
}

namespace {

struct CellGrid {
    int rows, cols, bins;
    std::vector<float> hist;  // rows*cols*bins, L2-normalized per cell

    float* cell(int r, int c) { return hist.data() + (static_cast<size_t>(r) * cols + c) * bins; }
    const float* cell(int r, int c) const {
        return hist.data() + (static_cast<size_t>(r) * cols + c) * bins;
    }
};

CellGrid cell_histograms(const Image& img, int cell, int bins, double eps) {
    CellGrid grid;
    grid.rows = img.height / cell;
    grid.cols = img.width / cell;
    grid.bins = bins;
    if (grid.rows < 1 || grid.cols < 1) {
        throw std::invalid_argument("mhog: image smaller than cell size " + std::to_string(cell));
    }
    grid.hist.assign(static_cast<size_t>(grid.rows) * grid.cols * bins, 0.0f);

    // Central-difference gradients; unsigned orientation folded to [0, pi).
    // Bin 0 is centered on a horizontal gradient (vertical edge).
    for (int r = 0; r < grid.rows * cell; ++r) {
        for (int c = 0; c < grid.cols * cell; ++c) {
            const double gx = img.at_clamped(r, c + 1) - img.at_clamped(r, c - 1);
            const double gy = img.at_clamped(r + 1, c) - img.at_clamped(r - 1, c);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double ang = std::atan2(gy, gx);
            if (ang < 0) ang += M_PI;
            if (ang >= M_PI) ang -= M_PI;
            int bin = static_cast<int>(ang / M_PI * bins + 0.5);
            if (bin >= bins) bin = 0;
            grid.cell(r / cell, c / cell)[bin] += static_cast<float>(mag);
        }
    }
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            float* h = grid.cell(r, c);
            double norm2 = 0.0;
            for (int b = 0; b < bins; ++b) norm2 += static_cast<double>(h[b]) * h[b];
            const double inv = 1.0 / (std::sqrt(norm2) + eps);
            for (int b = 0; b < bins; ++b) h[b] = static_cast<float>(h[b] * inv);
        }
    }
    return grid;
}

}  // namespace

MultiImage mhog_channels(const Image& image, const HogConfig& cfg) {
    if (cfg.cell_sizes.empty() || cfg.bins < 2) {
        throw std::invalid_argument("mhog: invalid config");
    }
    MultiImage out(image.height, image.width, static_cast<int>(cfg.cell_sizes.size()));
    for (size_t level = 0; level < cfg.cell_sizes.size(); ++level) {
        const CellGrid grid = cell_histograms(image, cfg.cell_sizes[level], cfg.bins, cfg.epsilon);
        Image energy(grid.rows, grid.cols);
        for (int r = 0; r < grid.rows; ++r) {
            for (int c = 0; c < grid.cols; ++c) {
                const float* h = grid.cell(r, c);
                energy.at(r, c) = *std::max_element(h, h + grid.bins);
            }
        }
        out.set_channel(static_cast<int>(level),
                        bilinear_resize(energy, image.height, image.width));
    }
    return out;
}

std::vector<float> mhog_descriptor(const Image& image, const HogConfig& cfg) {
    std::vector<float> desc;
    for (const int cell : cfg.cell_sizes) {
        const CellGrid grid = cell_histograms(image, cell, cfg.bins, cfg.epsilon);
        desc.insert(desc.end(), grid.hist.begin(), grid.hist.end());
    }
    return desc;
}

std::vector<float> LdaTransform::apply(const std::vector<float>& descriptor) const {
    if (static_cast<int>(descriptor.size()) != descriptor_dim) {
        throw std::invalid_argument("LdaTransform::apply: descriptor dim mismatch");
    }
    Eigen::VectorXd x(descriptor_dim);
    for (int i = 0; i < descriptor_dim; ++i) x[i] = descriptor[i];
    const Eigen::VectorXd y = projection.transpose() * x;
    std::vector<float> out(y.size());
    for (int i = 0; i < y.size(); ++i) out[i] = static_cast<float>(y[i]);
    return out;
}

LdaTransform fit_lda(const std::vector<std::vector<float>>& descriptors,
                     const std::vector<AnglePair>& gaze_labels,
                     double bin_width_deg, double lambda) {
    if (descriptors.size() != gaze_labels.size() || descriptors.empty()) {
        throw std::invalid_argument("fit_lda: descriptor/label count mismatch or empty");
    }
    const int dim = static_cast<int>(descriptors[0].size());
    const int n = static_cast<int>(descriptors.size());

    // Pseudo-classes: gaze quantized on a bin_width grid.
    std::map<std::pair<long, long>, std::vector<int>> classes;
    for (int i = 0; i < n; ++i) {
        const long by = std::lround(std::floor(gaze_labels[i].yaw / bin_width_deg));
        const long bp = std::lround(std::floor(gaze_labels[i].pitch / bin_width_deg));
        classes[{by, bp}].push_back(i);
    }
    if (classes.size() < 2) {
        throw std::invalid_argument(
            "fit_lda: all labels fall into one pseudo-class; need at least 2");
    }

    Eigen::MatrixXd X(n, dim);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(descriptors[i].size()) != dim) {
            throw std::invalid_argument("fit_lda: inconsistent descriptor dims");
        }
        for (int j = 0; j < dim; ++j) X(i, j) = descriptors[i][j];
    }
    const Eigen::RowVectorXd mean = X.colwise().mean();

    Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(dim, dim);
    std::vector<Eigen::RowVectorXd> class_means;
    for (const auto& [key, idx] : classes) {
        Eigen::RowVectorXd cm = Eigen::RowVectorXd::Zero(dim);
        for (const int i : idx) cm += X.row(i);
        cm /= static_cast<double>(idx.size());
        class_means.push_back(cm);
        for (const int i : idx) {
            const Eigen::RowVectorXd d = X.row(i) - cm;
            sw += d.transpose() * d;
        }
        const Eigen::RowVectorXd dm = cm - mean;
        sb += static_cast<double>(idx.size()) * dm.transpose() * dm;
    }
    sw.diagonal().array() += lambda;

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(sb, sw);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error(
            "fit_lda: scatter solve failed; try a larger shrinkage lambda");
    }
    const int k = std::min<int>(static_cast<int>(classes.size()) - 1, 32);

    // Eigenvalues ascend; take the trailing k directions and orthonormalize.
    Eigen::MatrixXd proj(dim, k);
    for (int j = 0; j < k; ++j) {
        proj.col(j) = solver.eigenvectors().col(dim - 1 - j);
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(proj);
    proj = qr.householderQ() * Eigen::MatrixXd::Identity(dim, k);

    LdaTransform out;
    out.projection = proj;
    out.bin_width_deg = bin_width_deg;
    out.descriptor_dim = dim;
    out.centroids.resize(static_cast<int>(class_means.size()), k);
    for (size_t i = 0; i < class_means.size(); ++i) {
        out.centroids.row(static_cast<int>(i)) = class_means[i] * proj;
    }
    return out;
}

void LdaTransform::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("LdaTransform::save: cannot open " + path);
    f << "gazekit-lda 1\n";
    f << "dim " << descriptor_dim << "\n";
    f << "k " << projection.cols() << "\n";
    f << "classes " << centroids.rows() << "\n";
    f << "bin_width_deg " << bin_width_deg << "\n";
    f << "data\n";
    auto write_mat = [&](const Eigen::MatrixXd& m) {
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) {
                const double v = m(i, j);
                f.write(reinterpret_cast<const char*>(&v), sizeof(double));
            }
    };
    write_mat(projection);
    write_mat(centroids);
}

LdaTransform LdaTransform::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("LdaTransform::load: cannot open " + path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    if (magic != "gazekit-lda" || version != 1) {
        throw std::runtime_error("LdaTransform::load: unrecognized header in " + path);
    }
    std::string key;
    LdaTransform out;
    int k = 0, classes = 0;
    f >> key >> out.descriptor_dim;  // dim
    f >> key >> k;
    f >> key >> classes;
    f >> key >> out.bin_width_deg;
    f >> key;  // "data"
    f.ignore(1);
    out.projection.resize(out.descriptor_dim, k);
    out.centroids.resize(classes, k);
    auto read_mat = [&](Eigen::MatrixXd& m) {
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) {
                double v = 0;
                f.read(reinterpret_cast<char*>(&v), sizeof(double));
                m(i, j) = v;
            }
    };
    read_mat(out.projection);
    read_mat(out.centroids);
    if (!f) throw std::runtime_error("LdaTransform::load: truncated file " + path);
    return out;
}

MultiImage assemble_input(const MultiImage& image, const MultiImage& extra_channels,
                          bool use_mhog) {
    auto clamp01 = [](MultiImage m) {
        for (auto& v : m.data) v = std::clamp(v, 0.0f, 1.0f);
        return m;
    };
    if (!use_mhog) {
        return clamp01(image);
    }
    if (extra_channels.height != image.height || extra_channels.width != image.width) {
        throw std::invalid_argument("assemble_input: channel shape mismatch");
    }
    MultiImage out(image.height, image.width, image.channels + extra_channels.channels);
    for (int c = 0; c < image.channels; ++c) out.set_channel(c, image.channel(c));
    for (int c = 0; c < extra_channels.channels; ++c) {
        out.set_channel(image.channels + c, extra_channels.channel(c));
    }
    return clamp01(out);
}

MultiImage to_multi(const Image& img) {
    MultiImage out(img.height, img.width, 1);
    out.set_channel(0, img);
    return out;
}

MultiImage prepare_image(const Image& img, const PreprocOptions& opts) {
    if (!opts.use_mhog) {
        return assemble_input(to_multi(img), MultiImage(), false);
    }
    return assemble_input(to_multi(img), mhog_channels(img, opts.hog), true);
}

}  // namespace gazekit
