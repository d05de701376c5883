from .config import format_config, read_config
from .ego import read_ego_poses
from .features import (
    attach_features,
    read_feature_sidecar,
    write_feature_sidecar,
)
from .kitti import (
    read_kitti_detections,
    read_kitti_tracks,
    write_detections,
    write_tracks,
)
