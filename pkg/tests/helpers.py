"""Small builders shared by the test modules."""

from scoretrack.domain import Detection, FrameOutput, FrameRecord, GtAnnotation, TrackRow


def det(frame=0, x=0.0, y=0.0, score=0.9, cls="car", z=0.0, yaw=0.0, seq=""):
    return Detection(frame, cls, x, y, z, 4.0, 2.0, 1.5, yaw, score, seq)


def gt(frame, iid, x, y=0.0, cls="car", seq=""):
    return GtAnnotation(frame, iid, cls, (x, y, 0.0), sequence=seq)


def row(frame, tid, x, y=0.0, score=1.0, cls="car", seq=""):
    return TrackRow(frame, tid, cls, (x, y, 0.0), (4.0, 2.0, 1.5), 0.0, score, True, seq)


def rec(tid, x, y=0.0, score=0.5, cls="car"):
    return FrameRecord(tid, cls, (x, y, 0.0), (4.0, 2.0, 1.5), 0.0, score, True)


def frame(index, *records, seq=""):
    return FrameOutput(index, tuple(records), seq)


# one "criterion N: PASS/FAIL ..." line per acceptance criterion, printed by conftest
ACCEPTANCE_LINES: dict[int, str] = {}
