import { beforeEach, describe, expect, it, vi } from 'vitest';

import type { PredictResponse } from '../src/api';
import { initUi, type UiRefs } from '../src/main';

const response: PredictResponse = {
  probabilities: { Mpox: 1, Chickenpox: 0, Measles: 0, Cowpox: 0, HFMD: 0, Healthy: 0 },
  suspected_mpox: true,
  mpox_probability: 1,
  advice: 'advice text',
  heatmap: null,
  model_id: 'x',
};

function buildDom(): UiRefs {
  document.body.innerHTML = `
    <input id="file" type="file">
    <img id="preview" hidden>
    <input id="consent" type="checkbox">
    <input id="want-heatmap" type="checkbox">
    <button id="submit" disabled></button>
    <div id="result"></div>
  `;
  return {
    fileInput: document.getElementById('file') as HTMLInputElement,
    preview: document.getElementById('preview') as HTMLImageElement,
    consent: document.getElementById('consent') as HTMLInputElement,
    wantHeatmap: document.getElementById('want-heatmap') as HTMLInputElement,
    submit: document.getElementById('submit') as HTMLButtonElement,
    result: document.getElementById('result') as HTMLElement,
  };
}

function selectFile(refs: UiRefs): void {
  const file = new File([new Uint8Array([9])], 'x.png', { type: 'image/png' });
  Object.defineProperty(refs.fileInput, 'files', { value: [file], configurable: true });
  refs.fileInput.dispatchEvent(new Event('change'));
}

beforeEach(() => {
  vi.stubGlobal('URL', { ...URL, createObjectURL: () => 'blob:preview' });
});

describe('initUi', () => {
  it('starts idle with submit disabled and consent unchecked', () => {
    const refs = buildDom();
    refs.consent.checked = true; // even a stale DOM state resets to opt-out
    const ui = initUi(refs);
    expect(ui.status()).toBe('idle');
    expect(refs.submit.disabled).toBe(true);
    expect(refs.consent.checked).toBe(false);
  });

  it('enables submit once an image is selected and shows the preview', () => {
    const refs = buildDom();
    initUi(refs);
    selectFile(refs);
    expect(refs.submit.disabled).toBe(false);
    expect(refs.preview.hidden).toBe(false);
    expect(refs.preview.src).toContain('blob:preview');
  });

  it('sends the consent checkbox state with the request', async () => {
    const refs = buildDom();
    const seen: string[] = [];
    const spy: typeof fetch = async (_url, init) => {
      seen.push((init!.body as FormData).get('consent_to_store') as string);
      return new Response(JSON.stringify(response), { status: 200 });
    };
    const ui = initUi(refs, spy);
    selectFile(refs);
    refs.submit.click();
    await vi.waitFor(() => expect(ui.status()).toBe('done'));
    refs.consent.checked = true;
    refs.submit.click();
    await vi.waitFor(() => expect(seen).toHaveLength(2));
    expect(seen).toEqual(['false', 'true']);
  });

  it('disables submit while a request is in flight', async () => {
    const refs = buildDom();
    let release!: () => void;
    const gate = new Promise<void>((resolve) => (release = resolve));
    const slow: typeof fetch = async () => {
      await gate;
      return new Response(JSON.stringify(response), { status: 200 });
    };
    const ui = initUi(refs, slow);
    selectFile(refs);
    refs.submit.click();
    expect(ui.status()).toBe('uploading');
    expect(refs.submit.disabled).toBe(true);
    release();
    await vi.waitFor(() => expect(ui.status()).toBe('done'));
    expect(refs.submit.disabled).toBe(false);
  });

  it('renders the result view after a successful submit', async () => {
    const refs = buildDom();
    initUi(refs, async () => new Response(JSON.stringify(response), { status: 200 }));
    selectFile(refs);
    refs.submit.click();
    await vi.waitFor(() =>
      expect(refs.result.querySelector('[data-role="verdict"]')).not.toBeNull(),
    );
    expect(refs.result.querySelector('[data-role="disclaimer"]')!.textContent).toBe('advice text');
  });

  it('shows an error banner and no verdict when the backend is down', async () => {
    const refs = buildDom();
    initUi(refs, async () => {
      throw new TypeError('connection refused');
    });
    selectFile(refs);
    refs.submit.click();
    await vi.waitFor(() => expect(refs.result.querySelector('[data-role="error"]')).not.toBeNull());
    expect(refs.result.querySelector('[data-role="verdict"]')).toBeNull();
  });
});
