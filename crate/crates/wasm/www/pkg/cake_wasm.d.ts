/* tslint:disable */
/* eslint-disable */

/**
 * One dual-scale mask sequence, split into its low- and high-resolution
 * parts.
 */
export class MaskExplorer {
    free(): void;
    [Symbol.dispose](): void;
    count(): number;
    high_res(t: number): Float64Array;
    /**
     * Low-resolution part shared by the block containing frame `t`.
     */
    low_res(t: number): Float64Array;
    /**
     * Real low-resolution kernel of the block containing frame `t`, at
     * detector resolution.
     */
    low_res_kernel(t: number): Float64Array;
    mask(t: number): Float64Array;
    measured_side(): number;
    /**
     * Masks for two exposure blocks of an `n x n` scene.
     */
    constructor(n: number, d: number, block_len: number, alpha: number, beta: number, seed: bigint);
    /**
     * Weights after normalization onto the unit circle.
     */
    weights(): Float64Array;
}

/**
 * A synthetic scene, its dual-scale CAKE measurements and estimates
 * recovered from them.
 */
export class Session {
    free(): void;
    [Symbol.dispose](): void;
    blocks(): number;
    /**
     * Closed-form preview, spline-upsampled to full rate.
     */
    coarse_frame(t: number): Float64Array;
    coarse_rmse(): number;
    frames(): number;
    measured_side(): number;
    measurement(k: number): Float64Array;
    /**
     * Renders an `n x n x frames` scene and simulates the measurement with
     * noise of standard deviation `sigma`.
     */
    constructor(n: number, frames: number, d: number, block_len: number, sigma: number, seed: bigint);
    recon_frame(t: number): Float64Array;
    /**
     * Runs TV-l1 reconstruction and returns its RMSE in percent.
     */
    reconstruct(tau_tv: number, tau_l1: number, max_iters: number): number;
    scene_frame(t: number): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_maskexplorer_free: (a: number, b: number) => void;
    readonly __wbg_session_free: (a: number, b: number) => void;
    readonly maskexplorer_count: (a: number) => number;
    readonly maskexplorer_high_res: (a: number, b: number) => [number, number];
    readonly maskexplorer_low_res: (a: number, b: number) => [number, number];
    readonly maskexplorer_low_res_kernel: (a: number, b: number) => [number, number];
    readonly maskexplorer_mask: (a: number, b: number) => [number, number];
    readonly maskexplorer_measured_side: (a: number) => number;
    readonly maskexplorer_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
    readonly maskexplorer_weights: (a: number) => [number, number];
    readonly session_blocks: (a: number) => number;
    readonly session_coarse_frame: (a: number, b: number) => [number, number, number, number];
    readonly session_coarse_rmse: (a: number) => [number, number, number];
    readonly session_frames: (a: number) => number;
    readonly session_measured_side: (a: number) => number;
    readonly session_measurement: (a: number, b: number) => [number, number, number, number];
    readonly session_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
    readonly session_recon_frame: (a: number, b: number) => [number, number, number, number];
    readonly session_reconstruct: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly session_scene_frame: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
