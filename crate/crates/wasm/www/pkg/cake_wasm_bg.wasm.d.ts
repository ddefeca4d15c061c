/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_maskexplorer_free: (a: number, b: number) => void;
export const __wbg_session_free: (a: number, b: number) => void;
export const maskexplorer_count: (a: number) => number;
export const maskexplorer_high_res: (a: number, b: number) => [number, number];
export const maskexplorer_low_res: (a: number, b: number) => [number, number];
export const maskexplorer_low_res_kernel: (a: number, b: number) => [number, number];
export const maskexplorer_mask: (a: number, b: number) => [number, number];
export const maskexplorer_measured_side: (a: number) => number;
export const maskexplorer_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
export const maskexplorer_weights: (a: number) => [number, number];
export const session_blocks: (a: number) => number;
export const session_coarse_frame: (a: number, b: number) => [number, number, number, number];
export const session_coarse_rmse: (a: number) => [number, number, number];
export const session_frames: (a: number) => number;
export const session_measured_side: (a: number) => number;
export const session_measurement: (a: number, b: number) => [number, number, number, number];
export const session_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
export const session_recon_frame: (a: number, b: number) => [number, number, number, number];
export const session_reconstruct: (a: number, b: number, c: number, d: number) => [number, number, number];
export const session_scene_frame: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
