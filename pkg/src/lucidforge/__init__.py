"""lucidforge: a demonstration-data engine for robot manipulation.

Compiles declarative scene descriptions to MJCF, retargets streamed hand
poses onto articulated models with damped-least-squares IK, records 25 Hz
episodes with 6-number rotations on disk, and amplifies recorded data via
keypoint warping and depth-based camera reprojection.
"""

__version__ = "0.1.0"
