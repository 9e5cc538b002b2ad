#pragma once

// Kalman estimation of the hand centroid and the camera-to-screen cursor
// mapping. Default model: 4-state constant velocity (position/velocity per
// axis), position-only measurements, white-acceleration process noise.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "gk/error.hpp"

namespace gk {

struct KalmanModel {
    Eigen::MatrixXd A;  // state transition
    Eigen::MatrixXd B;  // control input (held but unused: u = 0)
    Eigen::MatrixXd H;  // observation
    Eigen::MatrixXd Q;  // process noise covariance
    Eigen::MatrixXd R;  // measurement noise covariance
    bool joseph_update = true;

    int state_dim() const { return int(A.rows()); }
    int meas_dim() const { return int(H.rows()); }
};

struct KalmanState {
    Eigen::VectorXd x;
    Eigen::MatrixXd P;
    Eigen::VectorXd u;  // control input, default zero
    long t = 0;         // frame index
};

struct TrackingConfig {
    double dt = 1.0;
    double q = 0.05;        // white-acceleration intensity, px^2/frame^4
    double r = 4.0;         // measurement variance per axis, px^2
    double init_pos_var = 100.0;
    double init_vel_var = 400.0;
    int coast_limit = 10;   // predict-only frames before reinitializing
};

inline KalmanModel constant_velocity_model(const TrackingConfig& cfg = {}) {
    KalmanModel m;
    const double dt = cfg.dt;
    m.A = Eigen::MatrixXd::Identity(4, 4);
    m.A(0, 2) = dt;
    m.A(1, 3) = dt;
    m.B = Eigen::MatrixXd::Zero(4, 1);
    m.H = Eigen::MatrixXd::Zero(2, 4);
    m.H(0, 0) = 1.0;
    m.H(1, 1) = 1.0;
    Eigen::MatrixXd g(4, 2);
    g << dt * dt / 2, 0, 0, dt * dt / 2, dt, 0, 0, dt;
    m.Q = cfg.q * g * g.transpose();
    m.R = cfg.r * Eigen::MatrixXd::Identity(2, 2);
    return m;
}

inline KalmanState make_state(const KalmanModel& model, double px, double py,
                              const TrackingConfig& cfg = {}) {
    KalmanState s;
    s.x = Eigen::VectorXd::Zero(model.state_dim());
    s.x(0) = px;
    s.x(1) = py;
    s.P = Eigen::MatrixXd::Zero(model.state_dim(), model.state_dim());
    s.P(0, 0) = s.P(1, 1) = cfg.init_pos_var;
    s.P(2, 2) = s.P(3, 3) = cfg.init_vel_var;
    s.u = Eigen::VectorXd::Zero(model.B.cols());
    return s;
}

inline KalmanState kf_predict(const KalmanState& state, const KalmanModel& model) {
    if (state.x.size() != model.state_dim())
        throw std::invalid_argument("kf_predict: state/model dimension mismatch");
    KalmanState next = state;
    next.x = model.A * state.x + model.B * state.u;
    next.P = model.A * state.P * model.A.transpose() + model.Q;
    next.t = state.t + 1;
    return next;
}

inline KalmanState kf_update(const KalmanState& state, const KalmanModel& model,
                             const Eigen::VectorXd& z) {
    if (z.size() != model.meas_dim())
        throw std::invalid_argument("kf_update: measurement dimension mismatch");
    const Eigen::MatrixXd S = model.H * state.P * model.H.transpose() + model.R;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (!lu.isInvertible())
        throw numeric_error("kf_update: singular innovation covariance (inflate R)");
    const Eigen::MatrixXd K = state.P * model.H.transpose() * lu.inverse();
    KalmanState next = state;
    next.x = state.x + K * (z - model.H * state.x);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(state.x.size(), state.x.size());
    if (model.joseph_update) {
        const Eigen::MatrixXd IKH = I - K * model.H;
        next.P = IKH * state.P * IKH.transpose() + K * model.R * K.transpose();
    } else {
        next.P = (I - K * model.H) * state.P;
    }
    return next;
}

struct TrackPoint {
    KalmanState state;
    bool coasting = false;   // no measurement this frame
    bool reinit = false;     // coast limit exceeded, filter restarted
};

using MaybeCentroid = std::optional<std::pair<double, double>>;

// Per frame: predict, then update when a centroid is present. Missing frames
// coast on the motion model; after coast_limit of them the filter
// reinitializes from the next available measurement.
inline std::vector<TrackPoint> track_sequence(const std::vector<MaybeCentroid>& centroids,
                                              const KalmanModel& model,
                                              const TrackingConfig& cfg = {}) {
    std::size_t first = 0;
    while (first < centroids.size() && !centroids[first].has_value()) ++first;
    if (first == centroids.size()) throw data_error("track_sequence: no measurements at all");

    std::vector<TrackPoint> out;
    out.reserve(centroids.size());
    KalmanState state = make_state(model, centroids[first]->first, centroids[first]->second, cfg);
    int coasted = 0;
    bool needs_init = false;
    for (std::size_t i = 0; i <= first; ++i) {
        TrackPoint tp;
        tp.state = state;
        tp.state.t = long(i);
        tp.coasting = i < first;
        out.push_back(tp);
    }
    for (std::size_t i = first + 1; i < centroids.size(); ++i) {
        TrackPoint tp;
        if (centroids[i].has_value()) {
            if (needs_init) {
                state = make_state(model, centroids[i]->first, centroids[i]->second, cfg);
                state.t = long(i);
                tp.reinit = true;
                needs_init = false;
            } else {
                state = kf_update(kf_predict(state, model), model,
                                  Eigen::Vector2d(centroids[i]->first, centroids[i]->second));
            }
            coasted = 0;
        } else {
            state = kf_predict(state, model);
            tp.coasting = true;
            if (++coasted > cfg.coast_limit) needs_init = true;
        }
        state.t = long(i);
        tp.state = state;
        out.push_back(tp);
    }
    return out;
}

struct CursorSample {
    double raw_x = 0.0, raw_y = 0.0;        // camera pixels
    double smooth_x = 0.0, smooth_y = 0.0;  // screen pixels
    long frame_index = 0;
    double t_ms = 0.0;
};

// Linear camera-to-screen map with a horizontal mirror (webcam convention),
// clamped to the screen rectangle.
inline CursorSample map_to_screen(const KalmanState& state, int cam_w, int cam_h, int screen_w,
                                  int screen_h) {
    if (cam_w < 1 || cam_h < 1 || screen_w < 1 || screen_h < 1)
        throw std::invalid_argument("map_to_screen: dims must be positive");
    CursorSample s;
    s.raw_x = state.x(0);
    s.raw_y = state.x(1);
    s.frame_index = state.t;
    const double nx = cam_w > 1 ? s.raw_x / double(cam_w - 1) : 0.0;
    const double ny = cam_h > 1 ? s.raw_y / double(cam_h - 1) : 0.0;
    s.smooth_x = std::clamp((1.0 - nx) * double(screen_w - 1), 0.0, double(screen_w - 1));
    s.smooth_y = std::clamp(ny * double(screen_h - 1), 0.0, double(screen_h - 1));
    return s;
}

struct PathStats {
    double rms_jitter = 0.0;  // RMS of frame-to-frame displacement deviation from its mean
    double max_jump = 0.0;    // max frame-to-frame displacement
    double path_length = 0.0;
};

struct SmoothnessReport {
    PathStats raw;
    PathStats smoothed;
};

namespace detail {

template <typename Pts>
PathStats path_stats(const Pts& pts) {
    PathStats st;
    std::vector<double> steps;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double dx = pts[i].first - pts[i - 1].first;
        const double dy = pts[i].second - pts[i - 1].second;
        const double d = std::sqrt(dx * dx + dy * dy);
        steps.push_back(d);
        st.max_jump = std::max(st.max_jump, d);
        st.path_length += d;
    }
    double mean = 0.0;
    for (double d : steps) mean += d;
    mean /= double(steps.size());
    double ss = 0.0;
    for (double d : steps) ss += (d - mean) * (d - mean);
    st.rms_jitter = std::sqrt(ss / double(steps.size()));
    return st;
}

}  // namespace detail

inline SmoothnessReport smoothness_report(const std::vector<std::pair<double, double>>& raw,
                                          const std::vector<std::pair<double, double>>& smoothed) {
    if (raw.size() != smoothed.size())
        throw std::invalid_argument("smoothness_report: length mismatch");
    if (raw.size() < 2) throw data_error("smoothness_report: need at least 2 samples");
    SmoothnessReport rep;
    rep.raw = detail::path_stats(raw);
    rep.smoothed = detail::path_stats(smoothed);
    return rep;
}

}  // namespace gk
