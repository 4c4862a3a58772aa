/**
 * Three.js viewport: renders the current frame as a point cloud with the
 * label tint applied, orbit/pan/dolly camera, a sphere cursor for the brush,
 * and a brief brightness pulse on freshly labeled points (the stand-in for
 * haptic feedback).
 */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

export class Viewer {
  readonly camera: THREE.PerspectiveCamera;
  private readonly scene = new THREE.Scene();
  private readonly renderer: THREE.WebGLRenderer;
  private readonly controls: OrbitControls;
  private points: THREE.Points | null = null;
  private geometry: THREE.BufferGeometry | null = null;
  private readonly cursor: THREE.Mesh;
  private pulseUntil = 0;

  constructor(private readonly canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.scene.background = new THREE.Color(0x10141a);
    this.camera = new THREE.PerspectiveCamera(60, 1, 0.01, 100);
    this.camera.position.set(0, -2.2, 1.6);
    this.camera.up.set(0, 0, 1);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.target.set(0, 0, 1.2);
    this.controls.enableDamping = true;

    const geo = new THREE.SphereGeometry(1, 24, 16);
    const mat = new THREE.MeshBasicMaterial({
      color: 0xffffff,
      transparent: true,
      opacity: 0.25,
      depthWrite: false,
    });
    this.cursor = new THREE.Mesh(geo, mat);
    this.cursor.visible = false;
    this.scene.add(this.cursor);

    this.resize();
    window.addEventListener("resize", () => this.resize());
    this.renderer.setAnimationLoop(() => this.renderOnce());
  }

  get size(): { width: number; height: number } {
    return { width: this.canvas.clientWidth, height: this.canvas.clientHeight };
  }

  private resize() {
    const w = this.canvas.clientWidth || this.canvas.parentElement?.clientWidth || 800;
    const h = this.canvas.clientHeight || this.canvas.parentElement?.clientHeight || 600;
    this.renderer.setSize(w, h, false);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
  }

  /** Replace the displayed cloud; positions are never modified afterwards. */
  setCloud(positions: Float32Array, displayColors: Float32Array) {
    if (this.points) {
      this.scene.remove(this.points);
      this.geometry?.dispose();
      (this.points.material as THREE.Material).dispose();
    }
    this.geometry = new THREE.BufferGeometry();
    this.geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    this.geometry.setAttribute("color", new THREE.BufferAttribute(displayColors.slice(), 3));
    const material = new THREE.PointsMaterial({ size: 0.012, vertexColors: true });
    this.points = new THREE.Points(this.geometry, material);
    this.scene.add(this.points);
  }

  /** Update colors in place (brush feedback) without touching positions. */
  setColors(displayColors: Float32Array) {
    if (!this.geometry) return;
    const attr = this.geometry.getAttribute("color") as THREE.BufferAttribute;
    (attr.array as Float32Array).set(displayColors);
    attr.needsUpdate = true;
  }

  setCursor(center: [number, number, number] | null, radius: number) {
    if (center === null) {
      this.cursor.visible = false;
      return;
    }
    this.cursor.visible = true;
    this.cursor.position.set(center[0], center[1], center[2]);
    this.cursor.scale.setScalar(radius);
  }

  /** Brief visual pulse standing in for the controller's haptic feedback. */
  pulse() {
    this.pulseUntil = performance.now() + 120;
  }

  setControlsEnabled(enabled: boolean) {
    this.controls.enabled = enabled;
  }

  private renderOnce() {
    this.controls.update();
    if (this.points) {
      const mat = this.points.material as THREE.PointsMaterial;
      mat.size = performance.now() < this.pulseUntil ? 0.018 : 0.012;
    }
    this.renderer.render(this.scene, this.camera);
  }
}
