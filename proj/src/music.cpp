#include "choreo/music.hpp"

#include "choreo/errors.hpp"

namespace choreo {

MusicTrack::MusicTrack(int frames) : MusicTrack(Mat::Zero(frames, kChannels)) {}

MusicTrack::MusicTrack(Mat features) : features_(std::move(features)) {
    if (features_.cols() != kChannels) throw ShapeMismatch("music track must have 35 channels");
    if (features_.rows() < 1) throw ShapeMismatch("music track must have at least one frame");
}

std::vector<int> MusicTrack::beat_frames() const {
    std::vector<int> out;
    for (int l = 0; l < frames(); ++l)
        if (features_(l, kBeat) > 0.5) out.push_back(l);
    return out;
}

MusicTrack MusicTrack::slice(int start, int count) const {
    if (start < 0 || count < 1 || start + count > frames()) throw ShapeMismatch("music slice out of range");
    return MusicTrack(Mat(features_.middleRows(start, count)));
}

void MusicTrack::validate() const {
    if (!features_.allFinite()) throw FormatError("music track contains non-finite values");
    for (int l = 0; l < frames(); ++l) {
        for (int ch : {kBeat, kPeak}) {
            const double v = features_(l, ch);
            if (v != 0.0 && v != 1.0) throw FormatError("beat/peak channels must be binary");
        }
    }
}

}  // namespace choreo
