"""Online tracking engine.

Per frame: predict all tracks, split detections by score into a primary and
a secondary set, run a three-stage gated association, update matched tracks,
age out stale ones, and seed new tracks from leftover primary detections.

Stage 1 matches in order of increasing track age (most recently seen tracks
get first pick) using appearance distance in 2D and kernelized center
distance in 3D. Stage 2 retries recently lost tracks against the remaining
primary detections with enlarged-IoU distance (2D). Stage 3 gives all still
unmatched tracks a chance against the low-score secondary set, which keeps
weakly detected but already-tracked objects alive without ever seeding new
tracks from weak detections.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.stats

from .assignment import INADMISSIBLE, AssociationResult, solve_gated_assignment
from .config import default_class_configs
from .errors import ConfigError, NumericFailureError
from .kalman import (
    MotionModel,
    MotionModel2D,
    MotionModel3D,
    Noise2D,
    Noise3D,
    init_track_state,
    mahalanobis_sq,
    predict,
    update,
)
from .metrics import (
    cosine_gallery_dist_matrix,
    gauss_center_dist_matrix,
    iou_dist_matrix,
)
from .types import (
    Box,
    Camera,
    ClassConfig,
    Detection,
    Mode,
    ObjectClass,
    Track,
    box2d_from_state,
)

log = logging.getLogger(__name__)

# Stage 2 only admits tracks missed for fewer than this many frames,
# independent of the configured maximum age.
STAGE2_MAX_AGE = 3


@dataclass(frozen=True)
class EmittedTrack:
    """One output row: the raw observed box of a track matched this frame."""

    track_id: int
    box: Box
    score: float
    class_label: ObjectClass


@dataclass
class FrameResult:
    """Per-frame output plus association diagnostics."""

    frame: int
    emitted: list[EmittedTrack] = field(default_factory=list)
    stage_matches: tuple[int, int, int] = (0, 0, 0)
    created_ids: list[int] = field(default_factory=list)
    deleted_ids: list[int] = field(default_factory=list)


def split_detections(
    dets: Sequence[Detection], t_s: float
) -> tuple[list[Detection], list[Detection], list[Detection]]:
    """Partition detections by score.

    Primary: score > t_s. Secondary: t_s/2 <= score <= t_s (the boundary
    score t_s is kept rather than dropped between the sets). Discarded:
    score < t_s/2.
    """
    primary: list[Detection] = []
    secondary: list[Detection] = []
    discarded: list[Detection] = []
    for det in dets:
        if det.score > t_s:
            primary.append(det)
        elif det.score >= t_s / 2.0:
            secondary.append(det)
        else:
            discarded.append(det)
    return primary, secondary, discarded


def _pred_boxes(tracks: Sequence[Track]):
    return [box2d_from_state(t.state) for t in tracks]


def _track_centers(tracks: Sequence[Track]) -> np.ndarray:
    return np.array([t.state.mean[:3] for t in tracks]).reshape(len(tracks), 3)


def _det_centers(dets: Sequence[Detection]) -> np.ndarray:
    return np.array(
        [[d.box.cx, d.box.cy, d.box.cz] for d in dets]
    ).reshape(len(dets), 3)


def _iou_gate(config: ClassConfig, camera: Camera | None) -> float:
    if camera is None:
        raise ConfigError("2D IoU gating requires a camera")
    return config.max_iou_dist_for(camera)


@lru_cache(maxsize=None)
def _chi2_95(dof: int) -> float:
    return float(scipy.stats.chi2.ppf(0.95, dof))


def _apply_mahalanobis_gate(
    costs: np.ndarray,
    tracks: Sequence[Track],
    dets: Sequence[Detection],
    model: MotionModel,
) -> None:
    """Mark pairs whose innovation is a statistical outlier as inadmissible."""
    limit = _chi2_95(model.dim_obs)
    for i, track in enumerate(tracks):
        for j, det in enumerate(dets):
            if np.isfinite(costs[i, j]) and mahalanobis_sq(track.state, det, model) > limit:
                costs[i, j] = INADMISSIBLE


def stage1_cascade(
    tracks: Sequence[Track],
    dets: Sequence[Detection],
    config: ClassConfig,
    *,
    mode: Mode | str,
    camera: Camera | None = None,
    use_reid: bool = True,
    model: MotionModel | None = None,
) -> AssociationResult:
    """Age-ordered association against the primary detection set.

    Iterates age = 0 .. a_max, solving one gated assignment per age band
    over the detections still unclaimed, so a recently seen track always
    outranks a long-occluded one competing for the same detection. In 2D the
    cost is appearance distance against the track gallery (gate t_a), unless
    ``use_reid`` is false, in which case plain IoU distance with the camera
    gate is used. In 3D the cost is kernelized center distance (gate
    max_center_dist).
    """
    mode = Mode(mode)
    matches: list[tuple[int, int]] = []
    remaining = list(range(len(dets)))
    for age in range(config.a_max + 1):
        band = [i for i, t in enumerate(tracks) if t.age_since_update == age]
        if not band or not remaining:
            continue
        band_tracks = [tracks[i] for i in band]
        pool = [dets[j] for j in remaining]
        if mode is Mode.D3:
            costs = gauss_center_dist_matrix(
                _track_centers(band_tracks), _det_centers(pool), config.sigma
            )
            gate = config.max_center_dist
        elif use_reid:
            costs = cosine_gallery_dist_matrix(
                [t.gallery for t in band_tracks], [d.embedding for d in pool]
            )
            gate = config.t_a
        else:
            costs = iou_dist_matrix(_pred_boxes(band_tracks), [d.box for d in pool])
            gate = _iou_gate(config, camera)
        if config.mahalanobis_gating and model is not None:
            _apply_mahalanobis_gate(costs, band_tracks, pool, model)
        result = solve_gated_assignment(costs, gate)
        for r, c in result.matches:
            matches.append((band[r], remaining[c]))
        remaining = [remaining[c] for c in result.unmatched_detections]
    matched_tracks = {i for i, _ in matches}
    unmatched = [i for i in range(len(tracks)) if i not in matched_tracks]
    return AssociationResult(matches, unmatched, remaining)


def stage2_relaxed(
    tracks: Sequence[Track],
    dets: Sequence[Detection],
    config: ClassConfig,
    *,
    mode: Mode | str,
    camera: Camera | None = None,
) -> AssociationResult:
    """Second chance for recently lost tracks (age < 3) on leftover primary
    detections; 2D cost is IoU distance with boxes enlarged 2x."""
    mode = Mode(mode)
    eligible = [i for i, t in enumerate(tracks) if t.age_since_update < STAGE2_MAX_AGE]
    sub = [tracks[i] for i in eligible]
    if mode is Mode.D3:
        costs = gauss_center_dist_matrix(
            _track_centers(sub), _det_centers(dets), config.sigma
        )
        gate = config.max_center_dist
    else:
        costs = iou_dist_matrix(
            _pred_boxes(sub), [d.box for d in dets], factor=config.enlarge_stage2
        )
        gate = _iou_gate(config, camera)
    result = solve_gated_assignment(costs, gate)
    matches = [(eligible[r], c) for r, c in result.matches]
    matched_tracks = {i for i, _ in matches}
    unmatched = [i for i in range(len(tracks)) if i not in matched_tracks]
    return AssociationResult(matches, unmatched, list(result.unmatched_detections))


def stage3_secondary(
    tracks: Sequence[Track],
    dets: Sequence[Detection],
    config: ClassConfig,
    *,
    mode: Mode | str,
    camera: Camera | None = None,
) -> AssociationResult:
    """Match still-unmatched tracks against the weak (secondary) detections;
    2D cost is IoU distance with boxes enlarged 3x. Secondary detections
    that stay unmatched are dropped, never turned into tracks."""
    mode = Mode(mode)
    if mode is Mode.D3:
        costs = gauss_center_dist_matrix(
            _track_centers(tracks), _det_centers(dets), config.sigma
        )
        gate = config.max_center_dist
    else:
        costs = iou_dist_matrix(
            _pred_boxes(tracks), [d.box for d in dets], factor=config.enlarge_stage3
        )
        gate = _iou_gate(config, camera)
    return solve_gated_assignment(costs, gate)


class TrackerInstance:
    """Single-stream online tracker for one sequence (in 2D: one camera).

    ``step`` consumes one frame of detections at a time and must be called
    in frame order; nothing is buffered, so outputs are causal. Distinct
    instances are fully independent. Pass a shared ``id_counter`` to keep
    track ids unique across the per-camera instances of one sequence.
    """

    def __init__(
        self,
        mode: Mode | str,
        configs: Mapping[ObjectClass, ClassConfig] | None = None,
        camera_id: Camera | str | None = None,
        *,
        noise_2d: Noise2D | None = None,
        noise_3d: Noise3D | None = None,
        id_counter: Iterator[int] | None = None,
        use_stage3: bool = True,
        use_reid: bool = True,
    ):
        self.mode = Mode(mode)
        if self.mode is Mode.D2:
            if camera_id is None:
                raise ConfigError("2D tracking requires a camera_id")
            self.camera_id: Camera | None = Camera(camera_id)
            self.model: MotionModel = MotionModel2D(noise_2d)
        else:
            if camera_id is not None:
                raise ConfigError("3D tracking does not take a camera_id")
            self.camera_id = None
            self.model = MotionModel3D(noise_3d)
        self.configs = dict(configs) if configs is not None else default_class_configs(self.mode)
        self.tracks: list[Track] = []
        self.frame_index = 0
        self.use_stage3 = use_stage3
        self.use_reid = use_reid
        self._id_counter = id_counter if id_counter is not None else itertools.count(1)
        self._embeddings_seen = False
        self._fallback_logged = False

    def _config_for(self, label: ObjectClass) -> ClassConfig:
        try:
            return self.configs[label]
        except KeyError:
            raise ConfigError(f"no configuration for class {label.value!r}") from None

    def _validate(self, dets: Sequence[Detection]) -> None:
        for det in dets:
            if det.is_2d != (self.mode is Mode.D2):
                raise ConfigError(
                    f"detection box type does not match tracker mode {self.mode.value!r}"
                )
            if self.mode is Mode.D2 and det.camera_id != self.camera_id:
                raise ConfigError(
                    f"detection camera {det.camera_id} does not belong to this "
                    f"instance (camera {self.camera_id})"
                )
            self._config_for(det.class_label)

    def step(self, detections: Iterable[Detection]) -> FrameResult:
        dets = list(detections)
        self._validate(dets)
        result = FrameResult(frame=self.frame_index)

        if (
            self.mode is Mode.D2
            and self.use_reid
            and not self._embeddings_seen
            and any(d.embedding is not None for d in dets)
        ):
            self._embeddings_seen = True

        kept: list[Track] = []
        for track in self.tracks:
            try:
                track.state = predict(track.state, self.model)
                kept.append(track)
            except NumericFailureError as exc:
                log.warning("deleting track %d: %s", track.track_id, exc)
                result.deleted_ids.append(track.track_id)
        self.tracks = kept

        use_reid_now = True
        if self.mode is Mode.D2:
            use_reid_now = self.use_reid and self._embeddings_seen
            if not use_reid_now and not self._fallback_logged and self.tracks and dets:
                log.log(
                    logging.INFO if not self.use_reid else logging.WARNING,
                    "no appearance embeddings available; stage-1 association "
                    "falls back to IoU gating",
                )
                self._fallback_logged = True

        matched_pairs: list[tuple[Track, Detection]] = []
        unmatched_primary: list[Detection] = []
        s1 = s2 = s3 = 0
        for cls in ObjectClass:
            cls_tracks = [t for t in self.tracks if t.class_label is cls]
            cls_dets = [d for d in dets if d.class_label is cls]
            if not cls_tracks and not cls_dets:
                continue
            cfg = self._config_for(cls)
            prim, sec, _ = split_detections(cls_dets, cfg.t_s)

            r1 = stage1_cascade(
                cls_tracks, prim, cfg,
                mode=self.mode, camera=self.camera_id,
                use_reid=use_reid_now, model=self.model,
            )
            s1 += len(r1.matches)
            for ti, dj in r1.matches:
                matched_pairs.append((cls_tracks[ti], prim[dj]))
            rem_tracks = [cls_tracks[i] for i in r1.unmatched_tracks]
            rem_prim = [prim[j] for j in r1.unmatched_detections]

            r2 = stage2_relaxed(
                rem_tracks, rem_prim, cfg, mode=self.mode, camera=self.camera_id
            )
            s2 += len(r2.matches)
            for ti, dj in r2.matches:
                matched_pairs.append((rem_tracks[ti], rem_prim[dj]))
            rem_tracks2 = [rem_tracks[i] for i in r2.unmatched_tracks]
            unmatched_primary.extend(rem_prim[j] for j in r2.unmatched_detections)

            if self.use_stage3:
                r3 = stage3_secondary(
                    rem_tracks2, sec, cfg, mode=self.mode, camera=self.camera_id
                )
                s3 += len(r3.matches)
                for ti, dj in r3.matches:
                    matched_pairs.append((rem_tracks2[ti], sec[dj]))

        emit_pairs: list[tuple[Track, Detection]] = []
        matched_ids: set[int] = set()
        for track, det in matched_pairs:
            try:
                track.state = update(track.state, det, self.model)
            except NumericFailureError as exc:
                log.warning("deleting track %d: %s", track.track_id, exc)
                result.deleted_ids.append(track.track_id)
                self.tracks = [t for t in self.tracks if t is not track]
                continue
            cfg = self._config_for(track.class_label)
            track.age_since_update = 0
            track.hits += 1
            track.score = det.score
            track.last_observation = det
            if self.use_reid and det.embedding is not None:
                track.gallery.append(det.embedding)
                while len(track.gallery) > cfg.gallery_budget:
                    track.gallery.popleft()
            matched_ids.add(track.track_id)
            emit_pairs.append((track, det))

        kept = []
        for track in self.tracks:
            if track.track_id not in matched_ids:
                track.age_since_update += 1
            if track.age_since_update > self._config_for(track.class_label).a_max:
                result.deleted_ids.append(track.track_id)
            else:
                kept.append(track)
        self.tracks = kept

        for det in unmatched_primary:
            gallery: deque = deque()
            if self.use_reid and det.embedding is not None:
                gallery.append(det.embedding)
            track = Track(
                track_id=next(self._id_counter),
                state=init_track_state(det, self.model),
                class_label=det.class_label,
                camera_id=self.camera_id,
                score=det.score,
                age_since_update=0,
                hits=1,
                gallery=gallery,
                last_observation=det,
            )
            self.tracks.append(track)
            result.created_ids.append(track.track_id)
            emit_pairs.append((track, det))

        for track, det in sorted(emit_pairs, key=lambda pair: pair[0].track_id):
            if track.hits >= self._config_for(track.class_label).min_hits:
                result.emitted.append(
                    EmittedTrack(track.track_id, det.box, track.score, track.class_label)
                )

        result.stage_matches = (s1, s2, s3)
        self.frame_index += 1
        return result
