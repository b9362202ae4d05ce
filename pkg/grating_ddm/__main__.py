from grating_ddm.cli import main

main()
