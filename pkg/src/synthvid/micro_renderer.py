"""Flat-shaded z-buffered triangle rasterizer and engine-script emission.

The renderer is deliberately small: Lambertian flat shading, no shadows,
no textures, back-face culling on, near-plane clipping so room interiors
stay intact.  It exists to give the pipeline geometrically exact frames,
not pretty ones.  Pixel (i, j) covers [i, i+1) x [j, j+1); coverage is
sampled at pixel centers.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .camera_rig import PinholeCamera, generate_trajectory, rotation_about_axis
from .meshes import Mesh, bounding_sphere, room_box, transformed
from .scene_config import (
    AnimationKind,
    EngineTarget,
    EnvSpec,
    LightingSpec,
    RenderQuality,
    SceneConfig,
    SceneType,
    kelvin_to_rgb,
)

__all__ = [
    "Frame",
    "Projection",
    "animate_mesh",
    "emit_engine_script",
    "frame_sha256",
    "project_point",
    "project_points",
    "read_ppm",
    "render_frame",
    "render_video",
    "shaded_triangle_colors",
    "write_ppm",
]

NEAR_PLANE = 0.05
ROOM_HALF_EXTENT = 20.0


@dataclass(frozen=True)
class Frame:
    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8, row-major

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel buffer shape {px.shape} does not match "
                f"{self.height}x{self.width}x3")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)


class Projection(NamedTuple):
    x: float
    y: float
    depth: float
    behind: bool


def project_points(camera: PinholeCamera, points: np.ndarray,
                   width: int, height: int):
    """Pinhole-project world points.

    Returns ``(xy (N, 2), depth (N,), behind (N,) bool)``.  Focal length in
    pixels is ``focal_mm * height / sensor_height_mm``; the principal point
    is the image center.  Points at or behind the camera plane are flagged
    and get NaN coordinates.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    cam_space = (pts - camera.position) @ camera.rotation.T
    depth = cam_space[:, 2]
    behind = depth <= 0.0
    focal_px = camera.focal_mm * height / camera.sensor_height_mm
    with np.errstate(divide="ignore", invalid="ignore"):
        x = width / 2.0 + focal_px * cam_space[:, 0] / depth
        y = height / 2.0 + focal_px * cam_space[:, 1] / depth
    xy = np.stack([x, y], axis=1)
    xy[behind] = np.nan
    return xy, depth, behind


def project_point(camera: PinholeCamera, point, width: int, height: int) -> Projection:
    xy, depth, behind = project_points(camera, np.asarray(point, dtype=float), width, height)
    return Projection(float(xy[0, 0]), float(xy[0, 1]), float(depth[0]), bool(behind[0]))


# ---------------------------------------------------------------------------
# shading


def shaded_triangle_colors(mesh: Mesh, camera_position: np.ndarray,
                           lighting: LightingSpec):
    """Flat-shaded (pre-clamp) color and facing mask for every triangle.

    Color = base * (ambient + sum_i intensity_i * max(0, n . l_i) * tint_i)
    evaluated at the triangle centroid; the unclamped values are linear in
    the light intensities.
    """
    v = mesh.vertices
    t = mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    normals = np.cross(b - a, c - a)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    centroids = (a + b + c) / 3.0

    facing = np.einsum("ij,ij->i", normals, camera_position - centroids) > 0.0

    radiance = np.full((len(t), 3), float(lighting.ambient_intensity))
    for light in lighting.lights:
        to_light = np.asarray(light.position, dtype=float) - centroids
        to_light /= np.linalg.norm(to_light, axis=1, keepdims=True)
        lambert = np.maximum(0.0, np.einsum("ij,ij->i", normals, to_light))
        tint = np.asarray(kelvin_to_rgb(light.color_temp))
        radiance += light.intensity * lambert[:, None] * tint[None, :]

    return mesh.colors * radiance, facing


# ---------------------------------------------------------------------------
# rasterization


def _clip_near(tri_cam: np.ndarray) -> list[np.ndarray]:
    """Clip one camera-space triangle against z >= NEAR_PLANE.

    Returns 0, 1 or 2 triangles (Sutherland-Hodgman then a fan).
    """
    inside = tri_cam[:, 2] >= NEAR_PLANE
    if inside.all():
        return [tri_cam]
    if not inside.any():
        return []
    poly = []
    for i in range(3):
        cur, nxt = tri_cam[i], tri_cam[(i + 1) % 3]
        if inside[i]:
            poly.append(cur)
        if inside[i] != inside[(i + 1) % 3]:
            s = (NEAR_PLANE - cur[2]) / (nxt[2] - cur[2])
            poly.append(cur + s * (nxt - cur))
    return [np.stack([poly[0], poly[k], poly[k + 1]]) for k in range(1, len(poly) - 1)]


def _rasterize(cam_tris: list[np.ndarray], colors: list[np.ndarray],
               width: int, height: int, focal_px: float,
               background: np.ndarray) -> np.ndarray:
    img = np.empty((height, width, 3), dtype=float)
    img[:] = background
    zbuf = np.full((height, width), np.inf)

    cx, cy = width / 2.0, height / 2.0
    for tri, color in zip(cam_tris, colors):
        z = tri[:, 2]
        px = cx + focal_px * tri[:, 0] / z
        py = cy + focal_px * tri[:, 1] / z

        x_lo = max(int(math.floor(px.min() - 0.5)), 0)
        x_hi = min(int(math.ceil(px.max() + 0.5)), width - 1)
        y_lo = max(int(math.floor(py.min() - 0.5)), 0)
        y_hi = min(int(math.ceil(py.max() + 0.5)), height - 1)
        if x_lo > x_hi or y_lo > y_hi:
            continue

        xs = np.arange(x_lo, x_hi + 1) + 0.5
        ys = np.arange(y_lo, y_hi + 1) + 0.5
        gx, gy = np.meshgrid(xs, ys)

        def edge(ax, ay, bx, by):
            return (bx - ax) * (gy - ay) - (by - ay) * (gx - ax)

        w0 = edge(px[1], py[1], px[2], py[2])
        w1 = edge(px[2], py[2], px[0], py[0])
        w2 = edge(px[0], py[0], px[1], py[1])
        area = (px[1] - px[0]) * (py[2] - py[0]) - (py[1] - py[0]) * (px[2] - px[0])
        if abs(area) < 1e-12:
            continue
        if area < 0.0:
            w0, w1, w2, area = -w0, -w1, -w2, -area

        mask = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
        if not mask.any():
            continue

        # perspective-correct depth: interpolate 1/z with screen barycentrics
        inv_z = (w0 / z[0] + w1 / z[1] + w2 / z[2]) / area
        depth = 1.0 / inv_z

        tile_z = zbuf[y_lo:y_hi + 1, x_lo:x_hi + 1]
        update = mask & (depth < tile_z)
        tile_z[update] = depth[update]
        tile_img = img[y_lo:y_hi + 1, x_lo:x_hi + 1]
        tile_img[update] = color

    return img


def _background_color(env: EnvSpec) -> np.ndarray:
    if env.scene_type is SceneType.EMPTY:
        # alpha recorded in the config, rendered over opaque black
        return np.asarray(env.background_color[:3], dtype=float)
    return np.zeros(3)


def render_frame(mesh: Mesh, camera: PinholeCamera, lighting: LightingSpec,
                 env: EnvSpec, width: int, height: int,
                 quality: RenderQuality = RenderQuality.HIGH) -> Frame:
    """Rasterize one frame.

    ``Basic`` environments add an inward-facing room box of ``scene_color``
    around the scene; ``Empty`` fills the background color.  ``Low`` quality
    renders at half resolution and upscales nearest-neighbor.
    """
    if quality is RenderQuality.LOW and (width > 1 or height > 1):
        half = _render_float(mesh, camera, lighting, env,
                             max(1, width // 2), max(1, height // 2))
        iy = np.minimum(np.arange(height) // 2, half.shape[0] - 1)
        ix = np.minimum(np.arange(width) // 2, half.shape[1] - 1)
        img = half[iy][:, ix]
    else:
        img = _render_float(mesh, camera, lighting, env, width, height)
    pixels = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    return Frame(width=width, height=height, pixels=pixels)


def _render_float(mesh: Mesh, camera: PinholeCamera, lighting: LightingSpec,
                  env: EnvSpec, width: int, height: int) -> np.ndarray:
    scene = mesh
    if env.scene_type is SceneType.BASIC:
        room = room_box(env.scene_color, ROOM_HALF_EXTENT)
        scene = Mesh(
            np.concatenate([mesh.vertices, room.vertices]),
            np.concatenate([mesh.triangles, room.triangles + len(mesh.vertices)]),
            np.concatenate([mesh.colors, room.colors]),
        )

    shaded, facing = shaded_triangle_colors(scene, camera.position, lighting)
    shaded = np.clip(shaded, 0.0, 1.0)

    cam_space = (scene.vertices - camera.position) @ camera.rotation.T
    cam_tris, colors = [], []
    for ti in np.nonzero(facing)[0]:
        tri = cam_space[scene.triangles[ti]]
        for clipped in _clip_near(tri):
            cam_tris.append(clipped)
            colors.append(shaded[ti])

    focal_px = camera.focal_mm * height / camera.sensor_height_mm
    return _rasterize(cam_tris, colors, width, height, focal_px,
                      _background_color(env))


def animate_mesh(mesh: Mesh, animation, center, t_seconds: float) -> Mesh:
    """Mesh pose at ``t_seconds``: spin rotates about the vertical axis
    through ``center``, translate shifts by velocity * t."""
    if animation.kind is AnimationKind.SPIN:
        angle = math.radians(animation.rate_deg_per_s * t_seconds)
        return transformed(mesh, rotation=rotation_about_axis(np.array([0.0, 0.0, 1.0]), angle),
                           pivot=np.asarray(center, dtype=float))
    if animation.kind is AnimationKind.TRANSLATE:
        return transformed(mesh, translation=np.asarray(animation.velocity) * t_seconds)
    return mesh


def render_video(cfg: SceneConfig, mesh: Mesh) -> list[Frame]:
    """Render all ``cfg.n_frames`` frames of the configured clip."""
    center, radius = bounding_sphere(mesh)
    trajectory = generate_trajectory(cfg, center, radius)
    frames = []
    for k in range(cfg.n_frames):
        posed = animate_mesh(mesh, cfg.object_animation, center, k / cfg.fps)
        frames.append(render_frame(
            posed, trajectory.frames[k], cfg.lighting, cfg.environment,
            cfg.render.width, cfg.render.height, quality=cfg.render.quality))
    return frames


# ---------------------------------------------------------------------------
# PPM io


def write_ppm(frame: Frame, path) -> None:
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + frame.pixels.tobytes())


def read_ppm(path) -> Frame:
    data = Path(path).read_bytes()
    m = re.match(rb"P6\s+(\d+)\s+(\d+)\s+255\s", data)
    if not m:
        raise ValueError(f"{path}: not a binary P6 PPM")
    width, height = int(m.group(1)), int(m.group(2))
    pixels = np.frombuffer(data[m.end():], dtype=np.uint8)
    if pixels.size != width * height * 3:
        raise ValueError(f"{path}: truncated pixel data")
    return Frame(width=width, height=height, pixels=pixels.reshape(height, width, 3))


def frame_sha256(frame: Frame) -> str:
    h = hashlib.sha256()
    h.update(f"{frame.width}x{frame.height}".encode("ascii"))
    h.update(frame.pixels.tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# external engine script emission

_BLENDER_TEMPLATE = """\
# Auto-generated Blender scene script (emitted as text, never executed here).
# Scene seed: {seed}
import bpy
import math

scene = bpy.context.scene
scene.render.resolution_x = {width}
scene.render.resolution_y = {height}
scene.render.fps = {fps}
scene.frame_start = 1
scene.frame_end = {n_frames}
# render quality preset: {quality}
scene.cycles.samples = {samples}

# object
obj = make_object({object_ref!r})  # resolved against the local asset library
obj.location = (0.0, 0.0, 0.0)
# animation: {animation_kind} (rate {animation_rate} deg/s, velocity {animation_velocity})

{environment_block}
# lights
{light_block}
ambient_strength = {ambient}

# camera: {movement_type} sweep of {movement_value} over {n_frames} keyframes
cam_data = bpy.data.cameras.new("cam")
cam_data.lens = {focal_hint}
cam = bpy.data.objects.new("cam", cam_data)
scene.collection.objects.link(cam)
cam.location = {initial_position}
# focus: {focus_type} at the object's {focus_position} point, coverage {coverage}
for frame in range(1, {n_frames} + 1):
    place_camera(cam, frame_index=frame - 1, movement={movement_type!r},
                 value={movement_value}, n_frames={n_frames})
    cam.keyframe_insert(data_path="location", frame=frame)
    cam.keyframe_insert(data_path="rotation_euler", frame=frame)
"""


def emit_engine_script(cfg: SceneConfig) -> str:
    """Deterministic Blender-python text for configs targeting BlenderScript.

    The script is a textual artifact only; this package never executes it.
    Identical configs produce byte-identical text.
    """
    if cfg.render.engine_target is not EngineTarget.BLENDER_SCRIPT:
        raise ValueError("engine script emission requires engine_target = BlenderScript")

    env = cfg.environment
    if env.scene_type is SceneType.BASIC:
        r, g, b = env.scene_color
        environment_block = (
            "# environment: Basic room\n"
            f"room_color = ({r!r}, {g!r}, {b!r})\n"
            "build_room(room_color)\n"
        )
    else:
        r, g, b, a = env.background_color
        environment_block = (
            "# environment: Empty backdrop\n"
            f"bpy.data.worlds['World'].color = ({r!r}, {g!r}, {b!r})\n"
            f"background_alpha = {a!r}\n"
        )

    light_lines = []
    for i, light in enumerate(cfg.lighting.lights):
        light_lines.append(
            f"add_light(index={i}, position={tuple(light.position)!r}, "
            f"color_temp={light.color_temp!r}, energy={light.intensity!r})")
    light_block = "\n".join(light_lines) if light_lines else "# no point lights"

    return _BLENDER_TEMPLATE.format(
        seed=cfg.seed,
        width=cfg.render.width,
        height=cfg.render.height,
        fps=cfg.fps,
        n_frames=cfg.n_frames,
        quality=cfg.render.quality.value,
        samples=512 if cfg.render.quality is RenderQuality.HIGH else 64,
        object_ref=cfg.object_ref,
        animation_kind=cfg.object_animation.kind.value,
        animation_rate=cfg.object_animation.rate_deg_per_s,
        animation_velocity=tuple(cfg.object_animation.velocity),
        environment_block=environment_block,
        light_block=light_block,
        ambient=cfg.lighting.ambient_intensity,
        movement_type=cfg.camera.movement_type.value,
        movement_value=cfg.camera.movement_value,
        initial_position=tuple(cfg.camera.initial_position),
        focus_type=cfg.camera.focus_type.value,
        focus_position=cfg.camera.focus_position.value,
        coverage=cfg.camera.coverage,
        focal_hint=50.0,
    )
