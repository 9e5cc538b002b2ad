#pragma once

// Gesture-to-command dispatch: debouncing, the per-application mapping
// tables, simulated target applications (media player, audio player, a
// Mario-like action register, virtual mouse) and the action log.

#include <chrono>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>

#include "gk/error.hpp"
#include "gk/tracking.hpp"

namespace gk {

enum class Context { vlc, audio, mario, mouse };

inline const char* context_name(Context c) {
    switch (c) {
        case Context::vlc: return "vlc";
        case Context::audio: return "audio";
        case Context::mario: return "mario";
        case Context::mouse: return "mouse";
    }
    return "?";
}

inline Context context_from_name(const std::string& s) {
    for (Context c : {Context::vlc, Context::audio, Context::mario, Context::mouse})
        if (s == context_name(c)) return c;
    throw data_error("unknown context '" + s + "' (want vlc|audio|mario|mouse)");
}

// lowercase, non-alphanumerics collapsed to '_': "Volume Up" -> "volume_up"
inline std::string normalize_action(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (std::isalnum(static_cast<unsigned char>(ch)))
            out.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
        else if (!out.empty() && out.back() != '_')
            out.push_back('_');
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

inline const std::set<std::string>& valid_actions(Context ctx) {
    static const std::set<std::string> vlc = {"play",          "volume_up", "volume_down",
                                              "video_quit",    "go_to_next_video",
                                              "pause"};
    static const std::set<std::string> audio = {"play", "pause", "resume", "go_to_next_song",
                                                "go_to_previous_song"};
    static const std::set<std::string> mario = {"run", "jump_right", "hold_stay", "jump_left",
                                                "jump"};
    static const std::set<std::string> mouse = {"right_click", "double_click",  "left_click",
                                                "pointer_movement", "scroll_up", "scroll_down",
                                                "drag"};
    switch (ctx) {
        case Context::vlc: return vlc;
        case Context::audio: return audio;
        case Context::mario: return mario;
        case Context::mouse: return mouse;
    }
    throw data_error("bad context");
}

struct GestureMap {
    Context context = Context::vlc;
    std::map<std::string, std::string> entries;  // gesture label -> action name

    void validate() const {
        const auto& ok = valid_actions(context);
        for (const auto& [label, action] : entries)
            if (!ok.count(normalize_action(action)))
                throw data_error(std::string("gesture map: action '") + action +
                                 "' is not valid for context " + context_name(context));
    }
};

// The published mapping tables, verbatim.
inline GestureMap default_map(Context ctx) {
    GestureMap m;
    m.context = ctx;
    switch (ctx) {
        case Context::vlc:
            m.entries = {{"Ok", "Play"},           {"L", "Volume Up"},
                         {"Hang", "Volume down"},  {"Close", "Video quit"},
                         {"Two", "Go to next video"}, {"Five", "Pause"}};
            break;
        case Context::audio:
            m.entries = {{"Ok", "Play"},
                         {"Five", "Pause"},
                         {"Fist", "Resume"},
                         {"Two", "Go to next song"},
                         {"Three", "Go to previous song"}};
            break;
        case Context::mario:
            m.entries = {{"Ok", "Run"},
                         {"Five", "Jump right"},
                         {"Two", "Hold/Stay"},
                         {"Four", "Jump left"},
                         {"Thumb", "Jump"}};
            break;
        case Context::mouse:
            m.entries = {{"Two", "Right click"},   {"Ok", "Double click"},
                         {"Index", "Left click"},  {"Five", "Pointer movement"},
                         {"Heavy", "Scroll up"},   {"Hang", "Scroll down"},
                         {"Palm", "Drag"}};
            break;
    }
    return m;
}

inline nlohmann::json gesture_map_to_json(const GestureMap& m) {
    nlohmann::json j;
    j["context"] = context_name(m.context);
    j["entries"] = m.entries;
    return j;
}

inline GestureMap gesture_map_from_json(const nlohmann::json& j) {
    GestureMap m;
    if (!j.is_object() || !j.contains("context") || !j.contains("entries"))
        throw data_error("gesture map JSON: want {context, entries}");
    m.context = context_from_name(j.at("context").get<std::string>());
    for (const auto& [label, action] : j.at("entries").items())
        m.entries[label] = action.get<std::string>();
    m.validate();
    return m;
}

// ---------------------------------------------------------------- targets

struct MouseButtonEvent {
    bool press = true;
    std::string button;  // "left" | "right"
    long frame = 0;
};

struct TargetState {
    // vlc
    struct {
        bool playing = false, paused = false, quit = false;
        int volume = 50;
        int track = 0;
    } vlc;
    // audio
    struct {
        bool playing = false, paused = false;
        int track = 0;
    } audio;
    // mario
    struct {
        std::string action_register;
        long commands = 0;
    } mario;
    // mouse
    struct {
        double cursor_x = 0.0, cursor_y = 0.0;
        std::set<std::string> pressed;
        long scroll_offset = 0;
        std::optional<std::pair<double, double>> drag_anchor;
        std::vector<MouseButtonEvent> button_log;
    } mouse;
};

struct ActionEvent {
    std::string context;
    std::string action;   // verbatim map string ("Volume Up", "Right click", ...)
    std::string gesture;
    long frame_index = 0;
    double detect_t_ms = 0.0;
    double apply_t_ms = 0.0;
    double response_ms = 0.0;
    bool warning = false;  // illegal transition downgraded to noop
};

// ---------------------------------------------------------------- debounce

// Commit a label after k consecutive qualifying frames; re-commit only after
// the run is broken by a different label or a low-confidence frame. k = 1 is
// a degenerate passthrough.
class Debouncer {
public:
    Debouncer(int k, double conf_min) : k_(k), conf_min_(conf_min) {
        if (k < 1) throw std::invalid_argument("debounce: k must be >= 1");
    }

    std::optional<std::string> feed(const std::string& label, double confidence) {
        if (confidence < conf_min_) {
            run_label_.clear();
            run_len_ = 0;
            return std::nullopt;
        }
        if (label == run_label_) {
            ++run_len_;
        } else {
            run_label_ = label;
            run_len_ = 1;
        }
        if (k_ == 1) return label;
        if (run_len_ == k_) return label;
        return std::nullopt;
    }

    void reset() {
        run_label_.clear();
        run_len_ = 0;
    }

private:
    int k_;
    double conf_min_;
    std::string run_label_;
    int run_len_ = 0;
};

// ---------------------------------------------------------------- dispatch

namespace detail {

inline void mouse_release_if_dragging(TargetState& state, long frame) {
    if (state.mouse.drag_anchor.has_value()) {
        state.mouse.pressed.erase("left");
        state.mouse.button_log.push_back({false, "left", frame});
        state.mouse.drag_anchor.reset();
    }
}

inline void mouse_click(TargetState& state, const std::string& button, long frame, int times = 1) {
    for (int i = 0; i < times; ++i) {
        state.mouse.pressed.insert(button);
        state.mouse.button_log.push_back({true, button, frame});
        state.mouse.pressed.erase(button);
        state.mouse.button_log.push_back({false, button, frame});
    }
}

}  // namespace detail

// Applies one mouse action. Pointer movement follows the smoothed cursor;
// drag presses-and-holds until the next non-drag commit releases it.
inline void mouse_apply(const std::string& action, TargetState& state,
                        const std::optional<CursorSample>& cursor, long frame) {
    const std::string a = normalize_action(action);
    if (a != "drag") detail::mouse_release_if_dragging(state, frame);
    if (a == "pointer_movement") {
        if (cursor) {
            state.mouse.cursor_x = cursor->smooth_x;
            state.mouse.cursor_y = cursor->smooth_y;
        }
    } else if (a == "left_click") {
        detail::mouse_click(state, "left", frame);
    } else if (a == "right_click") {
        detail::mouse_click(state, "right", frame);
    } else if (a == "double_click") {
        detail::mouse_click(state, "left", frame, 2);
    } else if (a == "scroll_up") {
        state.mouse.scroll_offset += 1;
    } else if (a == "scroll_down") {
        state.mouse.scroll_offset -= 1;
    } else if (a == "drag") {
        if (!state.mouse.drag_anchor.has_value()) {
            if (cursor) {
                state.mouse.cursor_x = cursor->smooth_x;
                state.mouse.cursor_y = cursor->smooth_y;
            }
            state.mouse.pressed.insert("left");
            state.mouse.button_log.push_back({true, "left", frame});
            state.mouse.drag_anchor = {state.mouse.cursor_x, state.mouse.cursor_y};
        }
    }
}

// Returns the transition event, or nothing for an unmapped gesture. Illegal
// transitions dispatch as action "noop" with the warning flag set.
inline std::optional<ActionEvent> dispatch(const std::string& gesture, const GestureMap& map,
                                           TargetState& state, long frame = 0,
                                           double detect_t_ms = 0.0, double apply_t_ms = 0.0,
                                           const std::optional<CursorSample>& cursor = {}) {
    auto it = map.entries.find(gesture);
    if (it == map.entries.end()) return std::nullopt;
    const std::string& action = it->second;
    const std::string a = normalize_action(action);

    ActionEvent ev;
    ev.context = context_name(map.context);
    ev.action = action;
    ev.gesture = gesture;
    ev.frame_index = frame;
    ev.detect_t_ms = detect_t_ms;
    ev.apply_t_ms = apply_t_ms;
    ev.response_ms = apply_t_ms - detect_t_ms;

    switch (map.context) {
        case Context::vlc:
            if (state.vlc.quit) {  // nothing is legal after quit
                ev.action = "noop";
                ev.warning = true;
                return ev;
            }
            if (a == "play") {
                state.vlc.playing = true;
                state.vlc.paused = false;
            } else if (a == "pause") {
                state.vlc.playing = false;
                state.vlc.paused = true;
            } else if (a == "volume_up") {
                state.vlc.volume = std::min(100, state.vlc.volume + 10);
            } else if (a == "volume_down") {
                state.vlc.volume = std::max(0, state.vlc.volume - 10);
            } else if (a == "go_to_next_video") {
                state.vlc.track += 1;
            } else if (a == "video_quit") {
                state.vlc.quit = true;
                state.vlc.playing = false;
                state.vlc.paused = false;
            }
            break;
        case Context::audio:
            if (a == "play" || a == "resume") {
                state.audio.playing = true;
                state.audio.paused = false;
            } else if (a == "pause") {
                state.audio.playing = false;
                state.audio.paused = true;
            } else if (a == "go_to_next_song") {
                state.audio.track += 1;
            } else if (a == "go_to_previous_song") {
                state.audio.track = std::max(0, state.audio.track - 1);
            }
            break;
        case Context::mario:
            state.mario.action_register = action;
            state.mario.commands += 1;
            break;
        case Context::mouse:
            mouse_apply(action, state, cursor, frame);
            break;
    }
    return ev;
}

// ---------------------------------------------------------------- session

// One frame of a prediction trace (replay input or pipeline output).
struct TraceFrame {
    long frame = 0;
    double t_ms = 0.0;
    std::string label;
    double confidence = 1.0;
    std::optional<std::pair<double, double>> centroid;  // camera px, for mouse context
};

struct SessionConfig {
    int debounce_k = 5;
    double debounce_conf = 0.8;
    int cam_w = 640, cam_h = 480;
    int screen_w = 1920, screen_h = 1080;
    bool measured_timing = false;  // default: simulated clock, deterministic
    TrackingConfig tracking;
};

struct SessionResult {
    std::vector<ActionEvent> log;
    TargetState state;
    std::map<std::string, long> commits_per_action;
    long frames = 0;
    long commits = 0;
};

inline std::vector<TraceFrame> parse_trace_jsonl(std::istream& in, const std::string& name) {
    std::vector<TraceFrame> frames;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw data_error(name + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
        }
        if (!j.contains("label"))
            throw data_error(name + ":" + std::to_string(lineno) + ": missing 'label'");
        TraceFrame f;
        f.frame = j.value("frame", lineno - 1);
        f.t_ms = j.value("t_ms", double(f.frame) * (1000.0 / 25.0));
        f.label = j.at("label").get<std::string>();
        f.confidence = j.value("conf", 1.0);
        if (j.contains("centroid")) {
            const auto& c = j.at("centroid");
            if (!c.is_array() || c.size() != 2)
                throw data_error(name + ":" + std::to_string(lineno) + ": centroid wants [x,y]");
            f.centroid = {c[0].get<double>(), c[1].get<double>()};
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

// Replay loop: debounce -> dispatch, with Kalman-smoothed cursor tracking in
// the mouse context. The session clock comes from the trace; with simulated
// timing the dispatch completes within the tick and response_ms is 0.
inline SessionResult run_session(const std::vector<TraceFrame>& trace, const GestureMap& map,
                                 const SessionConfig& cfg = {}) {
    SessionResult res;
    Debouncer debounce(cfg.debounce_k, cfg.debounce_conf);

    const bool is_mouse = map.context == Context::mouse;
    KalmanModel model = constant_velocity_model(cfg.tracking);
    std::optional<KalmanState> kf;
    int coasted = 0;

    for (const TraceFrame& f : trace) {
        res.frames++;
        std::optional<CursorSample> cursor;
        if (is_mouse && f.centroid) {
            if (!kf) {
                kf = make_state(model, f.centroid->first, f.centroid->second, cfg.tracking);
            } else {
                kf = kf_update(kf_predict(*kf, model), model,
                               Eigen::Vector2d(f.centroid->first, f.centroid->second));
            }
            coasted = 0;
        } else if (is_mouse && kf) {
            kf = kf_predict(*kf, model);
            if (++coasted > cfg.tracking.coast_limit) kf.reset();
        }
        if (is_mouse && kf) {
            kf->t = f.frame;
            cursor = map_to_screen(*kf, cfg.cam_w, cfg.cam_h, cfg.screen_w, cfg.screen_h);
            cursor->t_ms = f.t_ms;
        }

        auto committed = debounce.feed(f.label, f.confidence);
        if (!committed) continue;
        const auto t0 = std::chrono::steady_clock::now();
        auto ev = dispatch(*committed, map, res.state, f.frame, f.t_ms, f.t_ms, cursor);
        if (ev && cfg.measured_timing) {
            const auto t1 = std::chrono::steady_clock::now();
            ev->response_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            ev->apply_t_ms = ev->detect_t_ms + ev->response_ms;
        }
        if (ev) {
            res.commits++;
            res.commits_per_action[ev->action]++;
            res.log.push_back(std::move(*ev));
        }
    }
    return res;
}

inline std::string action_log_jsonl(const std::vector<ActionEvent>& log) {
    std::string out;
    for (const auto& ev : log) {
        nlohmann::json j;
        j["ctx"] = ev.context;
        j["gesture"] = ev.gesture;
        j["action"] = ev.action;
        j["frame"] = ev.frame_index;
        j["response_ms"] = ev.response_ms;
        if (ev.warning) j["warn"] = true;
        out += j.dump();
        out += "\n";
    }
    return out;
}

}  // namespace gk
