#include "sdlab/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <stdexcept>

namespace sdlab {

namespace {

cv::Mat tensor_to_mat_rgb(const Tensor& image) {
    if (image.n != 1 || image.c != 3) {
        throw std::invalid_argument("image tensor must be 1x3xHxW, got " + shape_str(image));
    }
    cv::Mat m(image.h, image.w, CV_8UC3);
    for (int y = 0; y < image.h; ++y) {
        auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                double v = image.at(0, ch, y, x);
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                // BGR on the OpenCV side
                row[x][2 - ch] = static_cast<unsigned char>(v * 255.0 + 0.5);
            }
        }
    }
    return m;
}

}  // namespace

Tensor read_image_rgb(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
    if (m.empty()) {
        throw std::runtime_error("cannot read image '" + path + "'");
    }
    Tensor out(1, 3, m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < m.cols; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                out.at(0, ch, y, x) = row[x][2 - ch] / 255.0;
            }
        }
    }
    return out;
}

Tensor read_mask_gray(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) {
        throw std::runtime_error("cannot read mask '" + path + "'");
    }
    Tensor out(1, 1, m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < m.cols; ++x) {
            out.at(0, 0, y, x) = row[x] / 255.0;
        }
    }
    return out;
}

void write_image_rgb(const std::string& path, const Tensor& image) {
    if (!cv::imwrite(path, tensor_to_mat_rgb(image))) {
        throw std::runtime_error("cannot write image '" + path + "'");
    }
}

void write_mask_png(const std::string& path, const Tensor& mask) {
    if (mask.n != 1 || mask.c != 1) {
        throw std::invalid_argument("mask tensor must be 1x1xHxW, got " + shape_str(mask));
    }
    cv::Mat m(mask.h, mask.w, CV_8UC1);
    for (int y = 0; y < mask.h; ++y) {
        auto* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < mask.w; ++x) {
            row[x] = mask.at(0, 0, y, x) != 0.0 ? 255 : 0;
        }
    }
    if (!cv::imwrite(path, m)) {
        throw std::runtime_error("cannot write mask '" + path + "'");
    }
}

Tensor resize_image_bilinear(const Tensor& image, int out_h, int out_w) {
    if (image.h == out_h && image.w == out_w) return image;
    if (image.n != 1) throw std::invalid_argument("resize expects single-sample tensors");
    Tensor out(1, image.c, out_h, out_w);
    for (int ch = 0; ch < image.c; ++ch) {
        cv::Mat src(image.h, image.w, CV_64FC1,
                    const_cast<double*>(&image.at(0, ch, 0, 0)));
        cv::Mat dst(out_h, out_w, CV_64FC1, &out.at(0, ch, 0, 0));
        cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_LINEAR);
    }
    return out;
}

Tensor resize_mask_nearest(const Tensor& mask, int out_h, int out_w) {
    if (mask.h == out_h && mask.w == out_w) return mask;
    if (mask.n != 1) throw std::invalid_argument("resize expects single-sample tensors");
    Tensor out(1, mask.c, out_h, out_w);
    for (int ch = 0; ch < mask.c; ++ch) {
        cv::Mat src(mask.h, mask.w, CV_64FC1, const_cast<double*>(&mask.at(0, ch, 0, 0)));
        cv::Mat dst(out_h, out_w, CV_64FC1, &out.at(0, ch, 0, 0));
        cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_NEAREST);
    }
    return out;
}

}  // namespace sdlab
