// Screen wiring: pick an image, choose consent, submit, show the result.

import { ApiError, postPredict } from './api';
import { renderBusy, renderError, renderResult } from './render';

type Status = 'idle' | 'uploading' | 'done' | 'error';

export interface UiRefs {
  fileInput: HTMLInputElement;
  preview: HTMLImageElement;
  consent: HTMLInputElement;
  wantHeatmap: HTMLInputElement;
  submit: HTMLButtonElement;
  result: HTMLElement;
}

export function initUi(refs: UiRefs, fetchImpl: typeof fetch = fetch): { status: () => Status } {
  let status: Status = 'idle';
  let selected: File | null = null;

  const sync = () => {
    refs.submit.disabled = selected === null || status === 'uploading';
  };

  refs.consent.checked = false; // storage is opt-in, always starts unchecked
  sync();

  refs.fileInput.addEventListener('change', () => {
    selected = refs.fileInput.files?.[0] ?? null;
    if (selected) {
      refs.preview.src = URL.createObjectURL(selected);
      refs.preview.hidden = false;
    } else {
      refs.preview.hidden = true;
    }
    sync();
  });

  refs.submit.addEventListener('click', async () => {
    if (!selected || status === 'uploading') return;
    status = 'uploading';
    sync();
    renderBusy(refs.result);
    try {
      const result = await postPredict(selected, refs.consent.checked, refs.wantHeatmap.checked, fetchImpl);
      status = 'done';
      renderResult(refs.result, result);
    } catch (err) {
      status = 'error';
      renderError(refs.result, err instanceof ApiError ? err.message : 'Unexpected failure during screening.');
    } finally {
      sync();
    }
  });

  return { status: () => status };
}

export function mount(doc: Document = document): void {
  initUi({
    fileInput: doc.getElementById('file') as HTMLInputElement,
    preview: doc.getElementById('preview') as HTMLImageElement,
    consent: doc.getElementById('consent') as HTMLInputElement,
    wantHeatmap: doc.getElementById('want-heatmap') as HTMLInputElement,
    submit: doc.getElementById('submit') as HTMLButtonElement,
    result: doc.getElementById('result') as HTMLElement,
  });
}

if (typeof document !== 'undefined' && document.getElementById('submit')) {
  mount();
}
