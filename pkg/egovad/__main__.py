from egovad.main import main

main()
